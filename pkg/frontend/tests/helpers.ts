import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));

export function fixtureJson<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8"));
}

export function fixtureBytes(name: string): ArrayBuffer {
  const buf = readFileSync(join(here, "fixtures", name));
  return buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength);
}
