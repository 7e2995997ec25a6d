/**
 * Loader for recorded API exchanges.
 *
 * Every file under tests/fixtures/ is one exchange captured from the real
 * service by scripts/record_fixtures.py: the request method and path plus
 * the status and body that came back. Tests replay these through the
 * fixture server so the UI is exercised against genuine wire data.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURE_DIR = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export interface RecordedExchange {
  method: string;
  path: string;
  status: number;
  // Recorded wire payloads; tests narrow them to the shapes they assert on.
  body: any;
}

const cache = new Map<string, RecordedExchange>();

export function fixture(name: string): RecordedExchange {
  let exchange = cache.get(name);
  if (!exchange) {
    const raw = readFileSync(join(FIXTURE_DIR, `${name}.json`), "utf-8");
    exchange = JSON.parse(raw) as RecordedExchange;
    cache.set(name, exchange);
  }
  // Clone so a test mutating a body cannot poison later tests.
  return structuredClone(exchange);
}
