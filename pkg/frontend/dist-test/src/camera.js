/** Orbit camera: yaw/pitch rotation around the scene origin with uniform
 * scale; depth is kept for painter's-order sorting and size attenuation. */
export class OrbitCamera {
    constructor() {
        this.yaw = 0.6;
        this.pitch = 0.35;
        this.zoom = 1.0;
    }
    rotate(dxPx, dyPx) {
        this.yaw += dxPx * 0.01;
        this.pitch += dyPx * 0.01;
        const cap = Math.PI / 2 - 0.01;
        this.pitch = Math.max(-cap, Math.min(cap, this.pitch));
    }
    scaleZoom(factor) {
        this.zoom = Math.max(0.1, Math.min(20, this.zoom * factor));
    }
    /** Rotate a scene point into camera space; x/y are screen axes, depth
     * grows away from the viewer. */
    project(p) {
        const [x, y, z] = p;
        const cy = Math.cos(this.yaw);
        const sy = Math.sin(this.yaw);
        const cp = Math.cos(this.pitch);
        const sp = Math.sin(this.pitch);
        const x1 = cy * x + sy * z;
        const z1 = -sy * x + cy * z;
        const y2 = cp * y - sp * z1;
        const z2 = sp * y + cp * z1;
        return { x: x1 * this.zoom, y: -y2 * this.zoom, depth: z2 };
    }
}
