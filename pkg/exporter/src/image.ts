/**
 * Pure-JS image loading: PNG via pngjs, JPEG via jpeg-js, then bilinear
 * resize to the target square size (plain resize, no cropping).
 */

import { readFileSync } from 'fs'
import { PNG } from 'pngjs'
import jpeg from 'jpeg-js'

export interface RgbImage {
  width: number
  height: number
  /** RGB triples, row-major, length = width*height*3 */
  data: Uint8Array
}

const PNG_MAGIC = Buffer.from([0x89, 0x50, 0x4e, 0x47])
const JPEG_MAGIC = Buffer.from([0xff, 0xd8])

export function loadImage(path: string): RgbImage {
  const raw = readFileSync(path)
  if (raw.subarray(0, 4).equals(PNG_MAGIC)) {
    const png = PNG.sync.read(raw)
    return stripAlpha(png.width, png.height, png.data)
  }
  if (raw.subarray(0, 2).equals(JPEG_MAGIC)) {
    const img = jpeg.decode(raw, { useTArray: true, formatAsRGBA: true })
    return stripAlpha(img.width, img.height, img.data)
  }
  throw new Error(`${path}: not a PNG or JPEG`)
}

function stripAlpha(width: number, height: number, rgba: Uint8Array | Buffer): RgbImage {
  const out = new Uint8Array(width * height * 3)
  for (let i = 0, j = 0; i < width * height; i++, j += 4) {
    out[i * 3] = rgba[j]
    out[i * 3 + 1] = rgba[j + 1]
    out[i * 3 + 2] = rgba[j + 2]
  }
  return { width, height, data: out }
}

export function resizeBilinear(img: RgbImage, size: number): RgbImage {
  if (img.width === size && img.height === size) return img
  const out = new Uint8Array(size * size * 3)
  const xScale = img.width / size
  const yScale = img.height / size
  for (let y = 0; y < size; y++) {
    const sy = Math.min((y + 0.5) * yScale - 0.5, img.height - 1)
    const y0 = Math.max(Math.floor(sy), 0)
    const y1 = Math.min(y0 + 1, img.height - 1)
    const fy = sy - y0
    for (let x = 0; x < size; x++) {
      const sx = Math.min((x + 0.5) * xScale - 0.5, img.width - 1)
      const x0 = Math.max(Math.floor(sx), 0)
      const x1 = Math.min(x0 + 1, img.width - 1)
      const fx = sx - x0
      for (let c = 0; c < 3; c++) {
        const p00 = img.data[(y0 * img.width + x0) * 3 + c]
        const p01 = img.data[(y0 * img.width + x1) * 3 + c]
        const p10 = img.data[(y1 * img.width + x0) * 3 + c]
        const p11 = img.data[(y1 * img.width + x1) * 3 + c]
        const top = p00 + (p01 - p00) * fx
        const bottom = p10 + (p11 - p10) * fx
        out[(y * size + x) * 3 + c] = Math.round(top + (bottom - top) * fy)
      }
    }
  }
  return { width: size, height: size, data: out }
}
