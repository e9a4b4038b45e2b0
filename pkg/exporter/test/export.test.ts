import { readFileSync, writeFileSync, mkdirSync } from 'fs'
import { join } from 'path'
import { describe, expect, it } from 'vitest'

import { runExport } from '../src/export.js'
import { decodeFeatures } from '../src/pcpl-format.js'
import { loadImage, resizeBilinear } from '../src/image.js'
import { makeDataset, solidPng, tempDir } from './helpers.js'

function manifestFor(root: string, out: string) {
  return {
    root,
    outFeatures: join(out, 'features.pcpl'),
    outLabels: join(out, 'labels.txt'),
    outSummary: join(out, 'summary.json'),
    imageSize: 32,
    backbone: 'pool16',
  }
}

describe('image loading', () => {
  it('decodes and resizes to the target square', () => {
    const dir = tempDir('img-')
    writeFileSync(join(dir, 'x.png'), solidPng(10, 6, [100, 150, 200]))
    const img = resizeBilinear(loadImage(join(dir, 'x.png')), 16)
    expect(img.width).toBe(16)
    expect(img.height).toBe(16)
    // solid color survives interpolation exactly
    expect(img.data[0]).toBe(100)
    expect(img.data[1]).toBe(150)
    expect(img.data[2]).toBe(200)
  })

  it('rejects non-image bytes', () => {
    const dir = tempDir('img-')
    writeFileSync(join(dir, 'x.png'), Buffer.from('not an image'))
    expect(() => loadImage(join(dir, 'x.png'))).toThrow()
  })
})

describe('export', () => {
  it('writes aligned features, labels and summary', async () => {
    const root = tempDir('data-')
    const out = tempDir('out-')
    makeDataset(root, 2)
    const manifest = manifestFor(root, out)
    const summary = await runExport(manifest)

    expect(summary.n).toBe(4)
    expect(summary.d).toBe(16 * 16 * 3)
    expect(summary.classes).toEqual(['class_a', 'class_b'])
    expect(summary.class_counts).toEqual([2, 2])
    expect(summary.proportions.reduce((a, b) => a + b, 0)).toBeCloseTo(1.0, 9)
    expect(summary.skipped).toEqual([])

    const { n, d } = decodeFeatures(readFileSync(manifest.outFeatures))
    expect(n).toBe(4)
    expect(d).toBe(summary.d)
    const labels = readFileSync(manifest.outLabels, 'ascii').trim().split('\n').map(Number)
    expect(labels).toEqual([0, 0, 1, 1])
    const parsed = JSON.parse(readFileSync(manifest.outSummary, 'utf-8'))
    expect(parsed.class_counts).toEqual([2, 2])
  })

  it('is byte-identical across re-runs', async () => {
    const root = tempDir('data-')
    makeDataset(root, 3)
    const out1 = tempDir('out-')
    const out2 = tempDir('out-')
    await runExport(manifestFor(root, out1))
    await runExport(manifestFor(root, out2))
    expect(
      readFileSync(join(out1, 'features.pcpl')).equals(readFileSync(join(out2, 'features.pcpl')))
    ).toBe(true)
    expect(readFileSync(join(out1, 'labels.txt'), 'ascii')).toBe(
      readFileSync(join(out2, 'labels.txt'), 'ascii')
    )
  })

  it('skips unreadable images with a warning and records them', async () => {
    const root = tempDir('data-')
    const out = tempDir('out-')
    makeDataset(root, 2)
    writeFileSync(join(root, 'class_a', 'broken.png'), Buffer.from('garbage'))
    const summary = await runExport(manifestFor(root, out))
    expect(summary.n).toBe(4)
    expect(summary.skipped).toHaveLength(1)
    expect(summary.skipped[0]).toContain('broken.png')
    expect(summary.class_counts).toEqual([2, 2])
  })

  it('fails hard when nothing is readable', async () => {
    const root = tempDir('data-')
    const out = tempDir('out-')
    mkdirSync(join(root, 'class_a'))
    writeFileSync(join(root, 'class_a', 'broken.png'), Buffer.from('garbage'))
    await expect(runExport(manifestFor(root, out))).rejects.toThrow('no readable images')
  })

  it('fails hard without class directories', async () => {
    const root = tempDir('data-')
    const out = tempDir('out-')
    await expect(runExport(manifestFor(root, out))).rejects.toThrow('class subdirectories')
  })

  it('rejects unknown backbones', async () => {
    const root = tempDir('data-')
    makeDataset(root, 1)
    const out = tempDir('out-')
    const manifest = { ...manifestFor(root, out), backbone: 'resnet99' }
    await expect(runExport(manifest)).rejects.toThrow('unknown backbone')
  })
})
