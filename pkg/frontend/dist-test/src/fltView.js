/** Target-acquisition display: black cursor ring with a protrusion, red
 * target bands for aperture and orientation, countdown, dwell progress, and
 * the adjudication banner. All geometry mirrors server state. */
/** Ring radius in pixels for a normalized aperture (never collapses to 0). */
export function apertureRadius(r, maxPx) {
    return maxPx * (0.25 + 0.65 * Math.max(0, Math.min(1, r)));
}
/** Canvas angle for a normalized orientation (0.5 turn points up). */
export function orientationAngle(phi) {
    return phi * 2 * Math.PI - Math.PI / 2;
}
export class FltView {
    constructor(canvas) {
        this.canvas = canvas;
    }
    render(state, banner) {
        const ctx = this.canvas.getContext("2d");
        if (!ctx)
            return;
        const { width, height } = this.canvas;
        ctx.clearRect(0, 0, width, height);
        ctx.fillStyle = "#f4f4f4";
        ctx.fillRect(0, 0, width, height);
        if (!state) {
            ctx.fillStyle = "#666";
            ctx.font = "16px sans-serif";
            ctx.textAlign = "center";
            ctx.fillText("no active trial", width / 2, height / 2);
            return;
        }
        const cx = width / 2;
        const cy = height / 2;
        const maxPx = Math.min(width, height) * 0.42;
        const [r, phi] = state.cursor;
        const [targetR, targetPhi] = state.target;
        const hw = state.half_width;
        // red aperture band: annulus between the tolerance radii
        const rLo = apertureRadius(targetR - hw, maxPx);
        const rHi = apertureRadius(targetR + hw, maxPx);
        ctx.beginPath();
        ctx.arc(cx, cy, (rLo + rHi) / 2, 0, 2 * Math.PI);
        ctx.strokeStyle = "rgba(220, 40, 40, 0.45)";
        ctx.lineWidth = rHi - rLo;
        ctx.stroke();
        // red orientation wedge at the target angle
        const angLo = orientationAngle(targetPhi - hw);
        const angHi = orientationAngle(targetPhi + hw);
        ctx.beginPath();
        ctx.arc(cx, cy, maxPx * 1.06, angLo, angHi);
        ctx.strokeStyle = "rgba(220, 40, 40, 0.85)";
        ctx.lineWidth = maxPx * 0.08;
        ctx.stroke();
        // black cursor ring
        const ringR = apertureRadius(r, maxPx);
        ctx.beginPath();
        ctx.arc(cx, cy, ringR, 0, 2 * Math.PI);
        ctx.strokeStyle = "#111";
        ctx.lineWidth = 4;
        ctx.stroke();
        // protrusion at the cursor orientation
        const ang = orientationAngle(phi);
        ctx.beginPath();
        ctx.moveTo(cx + Math.cos(ang) * ringR, cy + Math.sin(ang) * ringR);
        ctx.lineTo(cx + Math.cos(ang) * (ringR + maxPx * 0.14), cy + Math.sin(ang) * (ringR + maxPx * 0.14));
        ctx.strokeStyle = "#111";
        ctx.lineWidth = 6;
        ctx.stroke();
        // countdown and prompt
        ctx.fillStyle = "#333";
        ctx.font = "15px sans-serif";
        ctx.textAlign = "left";
        const remaining = Math.max(0, state.time_limit_s - state.elapsed_s);
        ctx.fillText(`trial ${state.trial + 1}  ${state.prompt}`, 10, 22);
        ctx.fillText(state.started ? `${remaining.toFixed(1)} s` : "waiting for movement", 10, 44);
        // dwell progress bar (1 s of rest in the band completes the trial)
        const frac = Math.max(0, Math.min(1, state.dwell_s / 1.0));
        ctx.fillStyle = "#ddd";
        ctx.fillRect(10, height - 26, 160, 14);
        ctx.fillStyle = "#2c9f2c";
        ctx.fillRect(10, height - 26, 160 * frac, 14);
        ctx.strokeStyle = "#999";
        ctx.strokeRect(10, height - 26, 160, 14);
        if (banner && banner.trial === state.trial) {
            ctx.fillStyle = banner.outcome === "success" ? "rgba(44,159,44,0.92)" : "rgba(200,50,50,0.92)";
            ctx.fillRect(0, height / 2 - 28, width, 56);
            ctx.fillStyle = "#fff";
            ctx.font = "bold 24px sans-serif";
            ctx.textAlign = "center";
            ctx.fillText(banner.outcome === "success" ? "TARGET ACQUIRED" : "TIME OUT", width / 2, height / 2 + 8);
        }
    }
}
