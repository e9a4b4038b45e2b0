#!/usr/bin/env node
/**
 * pcpl-export export --root DIR --out-features F --out-labels L
 *                    [--out-summary S] [--image-size 228] [--backbone pool16]
 */

import { runExport } from './export.js'

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>()
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i]
    if (!flag.startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`bad argument ${flag}`)
    }
    out.set(flag.slice(2), argv[i + 1])
  }
  return out
}

async function main() {
  const [command, ...rest] = process.argv.slice(2)
  if (command !== 'export') {
    console.error('usage: pcpl-export export --root DIR --out-features F --out-labels L')
    process.exit(1)
  }
  let flags: Map<string, string>
  try {
    flags = parseArgs(rest)
  } catch (err) {
    console.error(`pcpl-export: ${(err as Error).message}`)
    process.exit(1)
  }
  for (const required of ['root', 'out-features', 'out-labels']) {
    if (!flags.has(required)) {
      console.error(`pcpl-export: missing --${required}`)
      process.exit(1)
    }
  }
  try {
    const summary = await runExport({
      root: flags.get('root')!,
      outFeatures: flags.get('out-features')!,
      outLabels: flags.get('out-labels')!,
      outSummary: flags.get('out-summary') ?? flags.get('out-features')! + '.summary.json',
      imageSize: Number(flags.get('image-size') ?? 228),
      backbone: flags.get('backbone') ?? 'pool16',
    })
    console.log(JSON.stringify(summary))
  } catch (err) {
    console.error(`pcpl-export: ${(err as Error).message}`)
    process.exit(1)
  }
}

main()
