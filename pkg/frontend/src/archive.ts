/**
 * Reader/writer for the CQWA tensor container used by the contrastiq package.
 *
 * Layout (little-endian): magic "CQWA", version u16, entry count u32, then per
 * entry name (u16 length + UTF-8), rank u8, dims u32 each, float32 values;
 * then a metadata block (count u32, key u16+bytes / value u32+bytes pairs) and
 * a trailing CRC32 over everything before it.
 */

import * as zlib from "zlib";

export interface Entry {
  shape: number[];
  values: Float32Array;
}

const MAGIC = Buffer.from("CQWA", "ascii");
const VERSION = 1;

export class WeightArchive {
  readonly entries = new Map<string, Entry>();
  readonly metadata = new Map<string, string>();

  add(name: string, shape: number[], values: Float32Array): void {
    if (this.entries.has(name)) {
      throw new Error(`duplicate entry name ${name}`);
    }
    const count = shape.reduce((a, b) => a * b, 1);
    if (values.length !== count) {
      throw new Error(`${name}: ${values.length} values for shape [${shape}]`);
    }
    this.entries.set(name, { shape: [...shape], values });
  }

  get(name: string): Entry {
    const entry = this.entries.get(name);
    if (!entry) {
      throw new Error(`missing entry ${name}`);
    }
    return entry;
  }

  toBuffer(): Buffer {
    const parts: Buffer[] = [MAGIC];
    const head = Buffer.alloc(6);
    head.writeUInt16LE(VERSION, 0);
    head.writeUInt32LE(this.entries.size, 2);
    parts.push(head);
    for (const [name, entry] of this.entries) {
      const nameBytes = Buffer.from(name, "utf-8");
      const header = Buffer.alloc(2 + nameBytes.length + 1 + 4 * entry.shape.length);
      let pos = 0;
      header.writeUInt16LE(nameBytes.length, pos);
      pos += 2;
      nameBytes.copy(header, pos);
      pos += nameBytes.length;
      header.writeUInt8(entry.shape.length, pos);
      pos += 1;
      for (const dim of entry.shape) {
        header.writeUInt32LE(dim, pos);
        pos += 4;
      }
      parts.push(header);
      // Float32Array is little-endian on every platform Node supports
      parts.push(Buffer.from(entry.values.buffer, entry.values.byteOffset, entry.values.byteLength));
    }
    const metaCount = Buffer.alloc(4);
    metaCount.writeUInt32LE(this.metadata.size, 0);
    parts.push(metaCount);
    for (const [key, value] of this.metadata) {
      const kb = Buffer.from(key, "utf-8");
      const vb = Buffer.from(value, "utf-8");
      const pair = Buffer.alloc(2 + kb.length + 4 + vb.length);
      pair.writeUInt16LE(kb.length, 0);
      kb.copy(pair, 2);
      pair.writeUInt32LE(vb.length, 2 + kb.length);
      vb.copy(pair, 6 + kb.length);
      parts.push(pair);
    }
    const body = Buffer.concat(parts);
    const crc = Buffer.alloc(4);
    crc.writeUInt32LE(zlib.crc32(body) >>> 0, 0);
    return Buffer.concat([body, crc]);
  }

  static fromBuffer(buffer: Buffer): WeightArchive {
    if (buffer.length < 14 || !buffer.subarray(0, 4).equals(MAGIC)) {
      throw new Error("not a CQWA archive");
    }
    const stored = buffer.readUInt32LE(buffer.length - 4);
    if ((zlib.crc32(buffer.subarray(0, buffer.length - 4)) >>> 0) !== stored) {
      throw new Error("CRC32 mismatch");
    }
    const archive = new WeightArchive();
    let pos = 4;
    const version = buffer.readUInt16LE(pos);
    pos += 2;
    if (version !== VERSION) {
      throw new Error(`unsupported version ${version}`);
    }
    const count = buffer.readUInt32LE(pos);
    pos += 4;
    for (let i = 0; i < count; i++) {
      const nameLen = buffer.readUInt16LE(pos);
      pos += 2;
      const name = buffer.subarray(pos, pos + nameLen).toString("utf-8");
      pos += nameLen;
      const rank = buffer.readUInt8(pos);
      pos += 1;
      const shape: number[] = [];
      for (let d = 0; d < rank; d++) {
        shape.push(buffer.readUInt32LE(pos));
        pos += 4;
      }
      const n = shape.reduce((a, b) => a * b, 1);
      const values = new Float32Array(n);
      for (let v = 0; v < n; v++) {
        values[v] = buffer.readFloatLE(pos);
        pos += 4;
      }
      archive.add(name, shape, values);
    }
    const metaCount = buffer.readUInt32LE(pos);
    pos += 4;
    for (let i = 0; i < metaCount; i++) {
      const keyLen = buffer.readUInt16LE(pos);
      pos += 2;
      const key = buffer.subarray(pos, pos + keyLen).toString("utf-8");
      pos += keyLen;
      const valLen = buffer.readUInt32LE(pos);
      pos += 4;
      archive.metadata.set(key, buffer.subarray(pos, pos + valLen).toString("utf-8"));
      pos += valLen;
    }
    if (pos !== buffer.length - 4) {
      throw new Error("trailing bytes before checksum");
    }
    return archive;
  }
}
