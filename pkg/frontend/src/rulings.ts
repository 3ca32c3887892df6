/**
 * Analyst rulings over states: benign / malicious / needs-review, with a
 * note and author. The latest ruling per state wins; the full history is
 * kept and round-trips through the rulings file.
 */

export type Verdict = "malicious" | "benign" | "needs-review";

export const VERDICTS: Verdict[] = ["malicious", "benign", "needs-review"];

export interface Ruling {
  stateKey: string;
  verdict: Verdict;
  note: string;
  author: string;
  timestamp: string; // ISO-8601
}

export interface RulingsFile {
  schema: 1;
  rulings: Ruling[];
}

export class UnknownStateError extends Error {
  constructor(stateKey: string) {
    super(`ruling refers to a state not in the loaded graph: ${stateKey}`);
  }
}

export class RulingStore {
  private history: Ruling[] = [];

  constructor(private readonly knownStates: Set<string>) {}

  record(
    stateKey: string,
    verdict: Verdict,
    note = "",
    author = "",
    timestamp?: string,
  ): Ruling {
    if (!this.knownStates.has(stateKey)) {
      throw new UnknownStateError(stateKey);
    }
    const ruling: Ruling = {
      stateKey,
      verdict,
      note,
      author,
      timestamp: timestamp ?? new Date().toISOString(),
    };
    this.history.push(ruling);
    return ruling;
  }

  /** Latest ruling per state, in recording order of their last update. */
  current(): Map<string, Ruling> {
    const out = new Map<string, Ruling>();
    for (const ruling of this.history) {
      out.delete(ruling.stateKey);
      out.set(ruling.stateKey, ruling);
    }
    return out;
  }

  currentFor(stateKey: string): Ruling | undefined {
    return this.current().get(stateKey);
  }

  allHistory(): readonly Ruling[] {
    return this.history;
  }

  exportJson(): string {
    const doc: RulingsFile = { schema: 1, rulings: [...this.history] };
    return JSON.stringify(doc, null, 2) + "\n";
  }

  /** Replace the store's contents with the file's history. */
  importJson(text: string): void {
    const doc = JSON.parse(text) as Partial<RulingsFile>;
    if (doc.schema !== 1 || !Array.isArray(doc.rulings)) {
      throw new Error(`not a rulings file (schema ${JSON.stringify(doc.schema)})`);
    }
    const imported: Ruling[] = [];
    for (const r of doc.rulings) {
      if (!this.knownStates.has(r.stateKey)) {
        throw new UnknownStateError(r.stateKey);
      }
      if (!VERDICTS.includes(r.verdict)) {
        throw new Error(`unknown verdict '${String(r.verdict)}'`);
      }
      imported.push({
        stateKey: r.stateKey,
        verdict: r.verdict,
        note: r.note ?? "",
        author: r.author ?? "",
        timestamp: r.timestamp ?? new Date().toISOString(),
      });
    }
    this.history = imported;
  }
}
