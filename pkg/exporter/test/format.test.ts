import { readFileSync } from 'fs'
import { join, dirname } from 'path'
import { fileURLToPath } from 'url'
import { describe, expect, it } from 'vitest'

import { decodeFeatures, encodeFeatures, encodeLabels } from '../src/pcpl-format.js'

const HERE = dirname(fileURLToPath(import.meta.url))
// the byte-level contract is pinned by a golden file checked by both
// components' test suites
const GOLDEN = join(HERE, '..', '..', 'tests', 'data', 'golden_2x3.pcpl')

describe('pcpl feature encoding', () => {
  it('matches the shared golden file byte for byte', () => {
    const encoded = encodeFeatures([
      [0.0, 1.0, -1.0],
      [0.5, 2.25, -3.75],
    ])
    expect(encoded.equals(readFileSync(GOLDEN))).toBe(true)
  })

  it('round-trips through its own decoder', () => {
    const rows = [
      [1.5, -2.25, 0.125],
      [3.0, 4.0, 5.0],
    ]
    const { n, d, values } = decodeFeatures(encodeFeatures(rows))
    expect(n).toBe(2)
    expect(d).toBe(3)
    expect([...values]).toEqual(rows.flat())
  })

  it('writes the documented header fields', () => {
    const buf = encodeFeatures([[7.0]])
    expect(buf.toString('ascii', 0, 4)).toBe('PCPL')
    expect(buf.readUInt8(4)).toBe(1)
    expect(buf.readUInt8(5)).toBe(1)
    expect(buf.readUInt16LE(6)).toBe(0)
    expect(buf.readUInt32LE(8)).toBe(1)
    expect(buf.readUInt32LE(12)).toBe(1)
    expect(buf.length).toBe(20)
  })

  it('rejects bad matrices', () => {
    expect(() => encodeFeatures([])).toThrow()
    expect(() => encodeFeatures([[1], [1, 2]])).toThrow('ragged')
    expect(() => encodeFeatures([[Number.NaN]])).toThrow('non-finite')
    expect(() => encodeFeatures([[1e300]])).toThrow('overflows')
  })
})

describe('label encoding', () => {
  it('one integer per line', () => {
    expect(encodeLabels([0, 2, 1])).toBe('0\n2\n1\n')
  })

  it('rejects non-class values', () => {
    expect(() => encodeLabels([-1])).toThrow()
    expect(() => encodeLabels([0.5])).toThrow()
  })
})
