/**
 * Byte-exact writers for the PCPL interchange formats.
 *
 * Feature file: 16-byte header (magic "PCPL", version u8=1, dtype u8=1 for
 * float32, reserved u16=0, n u32 LE, d u32 LE) followed by exactly n*d
 * little-endian float32 values, row-major. Labels are one ASCII base-10
 * integer per line. Any deviation breaks consumers, so the test suite
 * byte-compares against a golden file shared with the Python side.
 */

export const FEATURE_MAGIC = 'PCPL'
export const FEATURE_VERSION = 1
export const FEATURE_DTYPE_F32 = 1
export const HEADER_SIZE = 16

export function encodeFeatures(rows: number[][] | Float64Array[]): Buffer {
  const n = rows.length
  if (n === 0) throw new Error('feature matrix must have at least one row')
  const d = rows[0].length
  if (d === 0) throw new Error('feature matrix must have at least one column')

  const buf = Buffer.alloc(HEADER_SIZE + n * d * 4)
  buf.write(FEATURE_MAGIC, 0, 'ascii')
  buf.writeUInt8(FEATURE_VERSION, 4)
  buf.writeUInt8(FEATURE_DTYPE_F32, 5)
  buf.writeUInt16LE(0, 6)
  buf.writeUInt32LE(n, 8)
  buf.writeUInt32LE(d, 12)

  let offset = HEADER_SIZE
  for (const row of rows) {
    if (row.length !== d) throw new Error('ragged feature matrix')
    for (let j = 0; j < d; j++) {
      const v = row[j]
      if (!Number.isFinite(v)) throw new Error('non-finite feature value')
      buf.writeFloatLE(v, offset)
      if (!Number.isFinite(buf.readFloatLE(offset))) {
        throw new Error('feature value overflows 32-bit float')
      }
      offset += 4
    }
  }
  return buf
}

export function encodeLabels(labels: number[]): string {
  return labels.map(v => {
    if (!Number.isInteger(v) || v < 0) throw new Error(`bad label ${v}`)
    return `${v}\n`
  }).join('')
}

/** Parse a PCPL header+payload; used to sanity-check our own output. */
export function decodeFeatures(buf: Buffer): { n: number; d: number; values: Float32Array } {
  if (buf.length < HEADER_SIZE || buf.toString('ascii', 0, 4) !== FEATURE_MAGIC) {
    throw new Error('bad magic')
  }
  if (buf.readUInt8(4) !== FEATURE_VERSION) throw new Error('bad version')
  if (buf.readUInt8(5) !== FEATURE_DTYPE_F32) throw new Error('bad dtype')
  const n = buf.readUInt32LE(8)
  const d = buf.readUInt32LE(12)
  if (buf.length !== HEADER_SIZE + n * d * 4) throw new Error('bad payload length')
  const values = new Float32Array(n * d)
  for (let i = 0; i < n * d; i++) values[i] = buf.readFloatLE(HEADER_SIZE + i * 4)
  return { n, d, values }
}
