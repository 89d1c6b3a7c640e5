import { readFile } from 'node:fs/promises';

export interface PaperItem {
  id: string;
  text: string;
}

export interface CorpusDoc {
  papers?: { paper_id: string; title: string; abstract?: string }[];
  entities?: { entity_id: string; name: string }[];
}

/** Collapse runs of whitespace and trim. The only text preprocessing applied
 * before encoding; recorded in the sidecar metadata. */
export function normalizeWhitespace(s: string): string {
  return s.replace(/\s+/g, ' ').trim();
}

export async function readCorpus(path: string): Promise<CorpusDoc> {
  let raw: string;
  try {
    raw = await readFile(path, 'utf-8');
  } catch (err) {
    throw new Error(`cannot read corpus ${path}: ${(err as Error).message}`);
  }
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch (err) {
    throw new Error(`corpus ${path} is not valid JSON: ${(err as Error).message}`);
  }
  if (typeof doc !== 'object' || doc === null) {
    throw new Error(`corpus ${path}: top level must be an object`);
  }
  return doc as CorpusDoc;
}

/** Items to embed for one target, in corpus file order. Papers encode
 * title + abstract; entities encode their surface form. */
export function itemsForTarget(doc: CorpusDoc, target: 'doc' | 'entity'): PaperItem[] {
  if (target === 'doc') {
    return (doc.papers ?? []).map((p) => ({
      id: p.paper_id,
      text: normalizeWhitespace(`${p.title}\n${p.abstract ?? ''}`),
    }));
  }
  return (doc.entities ?? []).map((e) => ({
    id: e.entity_id,
    text: normalizeWhitespace(e.name),
  }));
}
