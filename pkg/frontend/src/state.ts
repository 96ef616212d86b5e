// Selection persistence: refreshing mid-batch must restore the same
// unsubmitted batch with its partial ratings (the server re-serves the
// batch; we re-attach the local selections keyed by its id).

import type { Selections } from "./view.js";

export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class MemoryStorage implements KeyValueStorage {
  private map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? (this.map.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}

interface Saved {
  batchId: string;
  selections: Selections;
}

export class SelectionStore {
  constructor(
    private storage: KeyValueStorage,
    private annotatorId: string,
  ) {}

  private key(): string {
    return `civility-audit:selections:${this.annotatorId}`;
  }

  load(batchId: string): Selections {
    const raw = this.storage.getItem(this.key());
    if (raw === null) {
      return {};
    }
    try {
      const saved = JSON.parse(raw) as Saved;
      // selections from an earlier, already-submitted batch are stale
      return saved.batchId === batchId ? saved.selections : {};
    } catch {
      return {};
    }
  }

  save(batchId: string, selections: Selections): void {
    const saved: Saved = { batchId, selections };
    this.storage.setItem(this.key(), JSON.stringify(saved));
  }

  clear(): void {
    this.storage.removeItem(this.key());
  }
}
