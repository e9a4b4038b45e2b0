/**
 * Feature backbones. `pool16` is the built-in deterministic embedder
 * (average-pooled 16x16 RGB patches, 768 dims): no weights to download, so
 * exports are reproducible anywhere. `mobilenet` wraps a pretrained
 * TensorFlow.js MobileNet when its packages and weights are reachable; it
 * fills the pretrained-CNN role but needs network access on first use.
 */

import { RgbImage } from './image.js'

export interface Backbone {
  readonly name: string
  readonly dim: number
  embed(img: RgbImage): Promise<number[]>
}

const POOL_GRID = 16

class PoolBackbone implements Backbone {
  readonly name = 'pool16'
  readonly dim = POOL_GRID * POOL_GRID * 3

  async embed(img: RgbImage): Promise<number[]> {
    const out = new Array<number>(this.dim).fill(0)
    const counts = new Array<number>(POOL_GRID * POOL_GRID).fill(0)
    for (let y = 0; y < img.height; y++) {
      const gy = Math.min(Math.floor((y * POOL_GRID) / img.height), POOL_GRID - 1)
      for (let x = 0; x < img.width; x++) {
        const gx = Math.min(Math.floor((x * POOL_GRID) / img.width), POOL_GRID - 1)
        const cell = gy * POOL_GRID + gx
        counts[cell]++
        for (let c = 0; c < 3; c++) {
          out[cell * 3 + c] += img.data[(y * img.width + x) * 3 + c]
        }
      }
    }
    for (let cell = 0; cell < counts.length; cell++) {
      const k = counts[cell] || 1
      for (let c = 0; c < 3; c++) out[cell * 3 + c] /= k * 255
    }
    return out
  }
}

class MobileNetBackbone implements Backbone {
  readonly name = 'mobilenet'
  readonly dim = 1024
  private model: any = null

  private async load() {
    if (this.model) return
    let tf: any
    let mobilenet: any
    try {
      // optional dependencies, resolved only when this backbone is requested
      const tfModule = '@tensorflow/tfjs'
      const mobilenetModule = '@tensorflow-models/mobilenet'
      tf = await import(tfModule)
      mobilenet = await import(mobilenetModule)
    } catch {
      throw new Error(
        'mobilenet backbone needs optional packages: ' +
          'npm install @tensorflow/tfjs @tensorflow-models/mobilenet ' +
          '(and network access to fetch the pretrained weights)'
      )
    }
    this.model = await mobilenet.load({ version: 1, alpha: 1.0 })
    this.tf = tf
  }

  private tf: any

  async embed(img: RgbImage): Promise<number[]> {
    await this.load()
    const tensor = this.tf.tensor3d(Array.from(img.data), [img.height, img.width, 3], 'int32')
    try {
      const features = this.model.infer(tensor, true)
      const values = Array.from(await features.data()) as number[]
      features.dispose()
      return values
    } finally {
      tensor.dispose()
    }
  }
}

export function getBackbone(name: string): Backbone {
  if (name === 'pool16') return new PoolBackbone()
  if (name === 'mobilenet') return new MobileNetBackbone()
  throw new Error(`unknown backbone '${name}' (available: pool16, mobilenet)`)
}
