/** Pure scene rasterizer: layers composited into an RGBA buffer that the app
 *  blits with putImageData. Keeping this DOM-free makes rendering exactly
 *  reproducible in tests. */
import type { SessionPayload } from "./api.js";
import type { DisplaySettings } from "./state.js";

export interface Scene {
  width: number;
  height: number;
  /** RGBA, row-major, width*height*4 bytes. */
  data: Uint8ClampedArray;
}

const SHAPE_GRAY: [number, number, number] = [128, 128, 128];
const SELECT_COLOR: [number, number, number] = [255, 220, 0];
const ENDPOINT_COLOR: [number, number, number] = [255, 140, 0];
const JUNCTION_COLOR: [number, number, number] = [0, 170, 0];
const BOUNDARY_COLOR: [number, number, number] = [60, 120, 255];

function put(scene: Scene, x: number, y: number, rgb: [number, number, number], a = 255) {
  if (x < 0 || y < 0 || x >= scene.width || y >= scene.height) return;
  const i = (y * scene.width + x) * 4;
  scene.data[i] = rgb[0];
  scene.data[i + 1] = rgb[1];
  scene.data[i + 2] = rgb[2];
  scene.data[i + 3] = a;
}

function marker(scene: Scene, x: number, y: number, rgb: [number, number, number]) {
  // 3x3 plus-shaped marker so nodes read at 1x zoom
  put(scene, x, y, rgb);
  put(scene, x + 1, y, rgb);
  put(scene, x - 1, y, rgb);
  put(scene, x, y + 1, rgb);
  put(scene, x, y - 1, rgb);
}

export interface ShapeLayer {
  width: number;
  height: number;
  /** Foreground flags, row-major, length width*height. */
  mask: Uint8Array;
}

/** Decode the service's shape PNG (already parsed to mask bytes by the app;
 *  tests build the layer directly). */
export function shapeLayerFromMask(width: number, height: number, mask: Uint8Array): ShapeLayer {
  if (mask.length !== width * height) {
    throw new Error(`mask length ${mask.length} != ${width}x${height}`);
  }
  return { width, height, mask };
}

export function renderScene(
  session: SessionPayload,
  selected: Set<string>,
  settings: DisplaySettings,
  shape: ShapeLayer | null,
): Scene {
  const { width, height } = session;
  const scene: Scene = {
    width,
    height,
    data: new Uint8ClampedArray(width * height * 4),
  };

  if (shape && shape.width === width && shape.height === height) {
    const alpha = Math.round(255 * settings.transparency);
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        if (shape.mask[y * width + x]) {
          put(scene, x, y, SHAPE_GRAY, alpha);
        }
      }
    }
    if (settings.boundaryVisible) {
      for (let y = 0; y < height; y++) {
        for (let x = 0; x < width; x++) {
          if (!shape.mask[y * width + x]) continue;
          let edge = false;
          for (const [dx, dy] of [[1, 0], [-1, 0], [0, 1], [0, -1]] as const) {
            const nx = x + dx;
            const ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= width || ny >= height || !shape.mask[ny * width + nx]) {
              edge = true;
              break;
            }
          }
          if (edge) put(scene, x, y, BOUNDARY_COLOR);
        }
      }
    }
  }

  for (const [x, y] of session.skeleton_points) {
    put(scene, x, y, settings.skeletonColor);
  }
  for (const b of session.branches) {
    if (!selected.has(b.id)) continue;
    for (const [x, y] of b.path) {
      put(scene, x, y, SELECT_COLOR);
    }
  }
  for (const [x, y] of session.junctions) {
    marker(scene, x, y, JUNCTION_COLOR);
  }
  for (const [x, y] of session.endpoints) {
    marker(scene, x, y, ENDPOINT_COLOR);
  }
  return scene;
}

export function sceneDigest(scene: Scene): string {
  // FNV-1a over the raw buffer; enough to compare frames in tests
  let h = 0x811c9dc5;
  for (let i = 0; i < scene.data.length; i++) {
    h ^= scene.data[i];
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return `${scene.width}x${scene.height}:${h.toString(16)}`;
}
