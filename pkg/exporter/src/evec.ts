import { open, rename, unlink } from 'node:fs/promises';
import type { FileHandle } from 'node:fs/promises';

// Binary vector-store layout, little-endian throughout:
//   "EVEC" | version u16 | dim u32 | count u64 | records
//   record: id_len u16 | id utf-8 | dim * float32
export const MAGIC = Buffer.from('EVEC', 'ascii');
export const VERSION = 1;

const HEADER_LEN = 4 + 2 + 4 + 8;

export interface EvecRecord {
  id: string;
  vector: Float32Array;
}

/**
 * Writes records to a temp file next to the target and renames on close,
 * so a crashed or failed export never leaves a partial file at the final
 * path. Records go out in the order they are appended.
 */
export class EvecWriter {
  private handle: FileHandle | null = null;
  private count = 0n;
  private readonly tmpPath: string;

  constructor(readonly path: string, readonly dim: number) {
    if (!Number.isInteger(dim) || dim <= 0) {
      throw new Error(`dim must be a positive integer, got ${dim}`);
    }
    this.tmpPath = `${path}.tmp-${process.pid}`;
  }

  async open(): Promise<void> {
    this.handle = await open(this.tmpPath, 'w');
    // count backfilled on finish
    const header = Buffer.alloc(HEADER_LEN);
    MAGIC.copy(header, 0);
    header.writeUInt16LE(VERSION, 4);
    header.writeUInt32LE(this.dim, 6);
    header.writeBigUInt64LE(0n, 10);
    await this.handle.write(header);
  }

  async append(id: string, vector: Float32Array): Promise<void> {
    if (!this.handle) throw new Error('writer is not open');
    if (vector.length !== this.dim) {
      throw new Error(`vector for ${id} has dim ${vector.length}, expected ${this.dim}`);
    }
    const idBuf = Buffer.from(id, 'utf-8');
    if (idBuf.length > 0xffff) throw new Error(`id too long: ${id.slice(0, 40)}...`);
    const rec = Buffer.alloc(2 + idBuf.length + 4 * this.dim);
    rec.writeUInt16LE(idBuf.length, 0);
    idBuf.copy(rec, 2);
    for (let i = 0; i < this.dim; i++) {
      rec.writeFloatLE(vector[i], 2 + idBuf.length + 4 * i);
    }
    await this.handle.write(rec);
    this.count += 1n;
  }

  /** Backfill the count, fsync, and move the temp file into place. */
  async finish(): Promise<void> {
    if (!this.handle) throw new Error('writer is not open');
    const countBuf = Buffer.alloc(8);
    countBuf.writeBigUInt64LE(this.count, 0);
    await this.handle.write(countBuf, 0, 8, 10);
    await this.handle.sync();
    await this.handle.close();
    this.handle = null;
    await rename(this.tmpPath, this.path);
  }

  /** Drop the temp file after a failed export. */
  async abort(): Promise<void> {
    if (this.handle) {
      await this.handle.close();
      this.handle = null;
    }
    await unlink(this.tmpPath).catch(() => {});
  }
}

/** Read a store back. Used by the exporter's own tests; the recommender has
 * its own loader. */
export async function readEvec(path: string): Promise<{ dim: number; records: EvecRecord[] }> {
  const handle = await open(path, 'r');
  try {
    const { size } = await handle.stat();
    const buf = Buffer.alloc(size);
    await handle.read(buf, 0, size, 0);
    if (size < HEADER_LEN || !buf.subarray(0, 4).equals(MAGIC)) {
      throw new Error(`${path}: bad magic/header`);
    }
    const version = buf.readUInt16LE(4);
    if (version !== VERSION) throw new Error(`${path}: unsupported version ${version}`);
    const dim = buf.readUInt32LE(6);
    const count = buf.readBigUInt64LE(10);
    const records: EvecRecord[] = [];
    let off = HEADER_LEN;
    for (let i = 0n; i < count; i++) {
      const idLen = buf.readUInt16LE(off);
      off += 2;
      const id = buf.subarray(off, off + idLen).toString('utf-8');
      off += idLen;
      const vector = new Float32Array(dim);
      for (let j = 0; j < dim; j++) vector[j] = buf.readFloatLE(off + 4 * j);
      off += 4 * dim;
      records.push({ id, vector });
    }
    if (off !== size) throw new Error(`${path}: trailing bytes after ${count} records`);
    return { dim, records };
  } finally {
    await handle.close();
  }
}
