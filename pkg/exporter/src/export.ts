/**
 * Scan a dataset root whose subdirectories are classes, embed every image
 * with the chosen backbone and write PCPL features + aligned labels + a JSON
 * summary. Files are processed in sorted path order so re-running on the
 * same inputs is byte-identical.
 */

import { readdirSync, statSync, writeFileSync } from 'fs'
import { join } from 'path'

import { getBackbone } from './backbone.js'
import { loadImage, resizeBilinear } from './image.js'
import { encodeFeatures, encodeLabels } from './pcpl-format.js'

export interface ExportManifest {
  root: string
  outFeatures: string
  outLabels: string
  outSummary: string
  imageSize: number // plain resize target, no crop
  backbone: string
}

export interface ExportSummary {
  n: number
  d: number
  backbone: string
  image_size: number
  classes: string[]
  class_counts: number[]
  proportions: number[]
  skipped: string[]
}

const IMAGE_EXTENSIONS = new Set(['.png', '.jpg', '.jpeg'])

function isImageFile(name: string): boolean {
  const dot = name.lastIndexOf('.')
  return dot >= 0 && IMAGE_EXTENSIONS.has(name.slice(dot).toLowerCase())
}

export function scanClasses(root: string): Map<string, string[]> {
  const classDirs = readdirSync(root)
    .filter(name => statSync(join(root, name)).isDirectory())
    .sort()
  if (classDirs.length === 0) {
    throw new Error(`${root}: no class subdirectories found`)
  }
  const byClass = new Map<string, string[]>()
  for (const dir of classDirs) {
    const files = readdirSync(join(root, dir))
      .filter(isImageFile)
      .sort()
      .map(name => join(root, dir, name))
    byClass.set(dir, files)
  }
  return byClass
}

export async function runExport(manifest: ExportManifest): Promise<ExportSummary> {
  const backbone = getBackbone(manifest.backbone)
  const byClass = scanClasses(manifest.root)
  const classes = [...byClass.keys()]

  const rows: number[][] = []
  const labels: number[] = []
  const skipped: string[] = []
  const classCounts = new Array<number>(classes.length).fill(0)

  for (let classId = 0; classId < classes.length; classId++) {
    for (const path of byClass.get(classes[classId])!) {
      let row: number[]
      try {
        const img = resizeBilinear(loadImage(path), manifest.imageSize)
        row = await backbone.embed(img)
      } catch (err) {
        console.warn(`warning: skipping ${path}: ${(err as Error).message}`)
        skipped.push(path)
        continue
      }
      rows.push(row)
      labels.push(classId)
      classCounts[classId]++
    }
  }

  if (rows.length === 0) {
    throw new Error(`${manifest.root}: no readable images`)
  }

  writeFileSync(manifest.outFeatures, encodeFeatures(rows))
  writeFileSync(manifest.outLabels, encodeLabels(labels))
  const summary: ExportSummary = {
    n: rows.length,
    d: rows[0].length,
    backbone: backbone.name,
    image_size: manifest.imageSize,
    classes,
    class_counts: classCounts,
    proportions: classCounts.map(c => c / rows.length),
    skipped,
  }
  writeFileSync(manifest.outSummary, JSON.stringify(summary, null, 2) + '\n')
  return summary
}
