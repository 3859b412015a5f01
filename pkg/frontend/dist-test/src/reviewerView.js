/** 3D decision-space view: calibration clusters as point clouds, the live
 * activity cursor as a white marker, rest anchored at the scene origin. */
import { OrbitCamera } from "./camera.js";
import { movementColor } from "./palette.js";
export class ReviewerView {
    constructor(canvas, store) {
        this.canvas = canvas;
        this.store = store;
        this.camera = new OrbitCamera();
        this.dragging = false;
        this.lastX = 0;
        this.lastY = 0;
        canvas.addEventListener("mousedown", (e) => {
            this.dragging = true;
            this.lastX = e.clientX;
            this.lastY = e.clientY;
        });
        window.addEventListener("mouseup", () => (this.dragging = false));
        window.addEventListener("mousemove", (e) => {
            if (!this.dragging)
                return;
            this.camera.rotate(e.clientX - this.lastX, e.clientY - this.lastY);
            this.lastX = e.clientX;
            this.lastY = e.clientY;
        });
        canvas.addEventListener("wheel", (e) => {
            e.preventDefault();
            this.camera.scaleZoom(e.deltaY < 0 ? 1.1 : 1 / 1.1);
        });
    }
    render() {
        const ctx = this.canvas.getContext("2d");
        if (!ctx)
            return;
        const { width, height } = this.canvas;
        ctx.clearRect(0, 0, width, height);
        ctx.fillStyle = "#101218";
        ctx.fillRect(0, 0, width, height);
        const clusters = this.store.clusters;
        const scale = this.sceneScale();
        const cx = width / 2;
        const cy = height / 2;
        const items = [];
        if (clusters) {
            for (const movement of clusters.movements) {
                if (!this.store.isVisible(movement))
                    continue;
                const color = movementColor(movement);
                for (const p of clusters.points[movement] ?? []) {
                    const q = this.camera.project(p);
                    items.push({ x: q.x, y: q.y, depth: q.depth, size: 2.4, fill: color });
                }
                const c = clusters.centroids[movement];
                if (c) {
                    const q = this.camera.project(c);
                    items.push({
                        x: q.x,
                        y: q.y,
                        depth: q.depth,
                        size: 6,
                        fill: color,
                        stroke: "#ffffff",
                    });
                }
            }
        }
        const cursor = this.store.cursor;
        if (cursor) {
            const q = this.camera.project(cursor.p);
            items.push({ x: q.x, y: q.y, depth: q.depth, size: 7, fill: "#ffffff", stroke: "#303030" });
        }
        items.sort((a, b) => b.depth - a.depth);
        for (const item of items) {
            ctx.beginPath();
            ctx.arc(cx + item.x * scale, cy + item.y * scale, item.size, 0, 2 * Math.PI);
            ctx.fillStyle = item.fill;
            ctx.fill();
            if (item.stroke) {
                ctx.strokeStyle = item.stroke;
                ctx.lineWidth = 1.5;
                ctx.stroke();
            }
        }
        // origin marker: the rest anchor
        const o = this.camera.project([0, 0, 0]);
        ctx.beginPath();
        ctx.arc(cx + o.x * scale, cy + o.y * scale, 3, 0, 2 * Math.PI);
        ctx.strokeStyle = "#888888";
        ctx.stroke();
    }
    /** Pixels per scene unit, fit to the cluster extent. */
    sceneScale() {
        const clusters = this.store.clusters;
        let extent = 1.0;
        if (clusters) {
            for (const movement of clusters.movements) {
                const c = clusters.centroids[movement];
                if (c)
                    extent = Math.max(extent, Math.abs(c[0]), Math.abs(c[1]), Math.abs(c[2]));
            }
        }
        return (Math.min(this.canvas.width, this.canvas.height) * 0.35) / extent;
    }
}
