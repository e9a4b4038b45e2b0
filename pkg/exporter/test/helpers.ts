import { mkdtempSync, mkdirSync, writeFileSync } from 'fs'
import { tmpdir } from 'os'
import { join } from 'path'
import { PNG } from 'pngjs'
import jpeg from 'jpeg-js'

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix))
}

export function solidPng(width: number, height: number, rgb: [number, number, number]): Buffer {
  const png = new PNG({ width, height })
  for (let i = 0; i < width * height; i++) {
    png.data[i * 4] = rgb[0]
    png.data[i * 4 + 1] = rgb[1]
    png.data[i * 4 + 2] = rgb[2]
    png.data[i * 4 + 3] = 255
  }
  return PNG.sync.write(png)
}

export function solidJpeg(width: number, height: number, rgb: [number, number, number]): Buffer {
  const data = Buffer.alloc(width * height * 4)
  for (let i = 0; i < width * height; i++) {
    data[i * 4] = rgb[0]
    data[i * 4 + 1] = rgb[1]
    data[i * 4 + 2] = rgb[2]
    data[i * 4 + 3] = 255
  }
  return jpeg.encode({ data, width, height }, 95).data
}

/** Two-class dataset: class_a holds dark PNGs, class_b bright JPEGs. */
export function makeDataset(root: string, perClass = 2): void {
  mkdirSync(join(root, 'class_a'))
  mkdirSync(join(root, 'class_b'))
  for (let i = 0; i < perClass; i++) {
    writeFileSync(join(root, 'class_a', `img_${i}.png`), solidPng(10 + i, 8, [20 + i, 30, 40]))
    writeFileSync(join(root, 'class_b', `img_${i}.jpg`), solidJpeg(12, 9 + i, [200, 210 - i, 220]))
  }
}
