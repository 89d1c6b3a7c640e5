import { writeFile } from 'node:fs/promises';

import { itemsForTarget, readCorpus, type PaperItem } from './corpus.js';
import { EvecWriter } from './evec.js';
import type { EmbeddingProvider } from './provider.js';

export interface ExportJob {
  corpusPath: string;
  target: 'doc' | 'entity';
  outPath: string;
  dim: number;
  batchSize: number;
  maxConcurrent: number;
}

export const DEFAULT_DOC_DIM = 768;
export const DEFAULT_ENTITY_DIM = 1536;

export interface ExportResult {
  count: number;
  dim: number;
  failures: { id: string; error: string }[];
}

function chunk<T>(items: T[], size: number): T[][] {
  const out: T[][] = [];
  for (let i = 0; i < items.length; i += size) out.push(items.slice(i, i + size));
  return out;
}

/** Run async jobs with at most `limit` in flight, preserving result order. */
async function mapBounded<T, R>(
  items: T[],
  limit: number,
  fn: (item: T, index: number) => Promise<R>,
): Promise<R[]> {
  const results = new Array<R>(items.length);
  let cursor = 0;
  const workers = Array.from({ length: Math.max(1, Math.min(limit, items.length)) }, async () => {
    for (;;) {
      const i = cursor++;
      if (i >= items.length) return;
      results[i] = await fn(items[i], i);
    }
  });
  await Promise.all(workers);
  return results;
}

/**
 * Embed every item for the job's target and write the vector store.
 *
 * Requests run batched with bounded parallelism; the file is written
 * single-threaded in corpus order once every batch has resolved. Any batch
 * failure aborts the export: per-item errors are collected into the thrown
 * message and nothing is left at the final path.
 */
export async function runExport(
  job: ExportJob,
  provider: EmbeddingProvider,
): Promise<ExportResult> {
  const corpus = await readCorpus(job.corpusPath);
  const items = itemsForTarget(corpus, job.target);
  const seen = new Set<string>();
  for (const item of items) {
    if (seen.has(item.id)) throw new Error(`duplicate id in corpus: ${item.id}`);
    seen.add(item.id);
  }

  const batches = chunk(items, job.batchSize);
  const failures: { id: string; error: string }[] = [];
  const vectorBatches = await mapBounded(batches, job.maxConcurrent, async (batch) => {
    try {
      return await provider.embed(
        batch.map((it: PaperItem) => it.text),
        job.dim,
      );
    } catch (err) {
      for (const it of batch) failures.push({ id: it.id, error: (err as Error).message });
      return null;
    }
  });

  if (failures.length > 0) {
    const shown = failures
      .slice(0, 5)
      .map((f) => `${f.id}: ${f.error}`)
      .join('; ');
    throw new Error(`${failures.length} item(s) failed, no output written (${shown})`);
  }

  const writer = new EvecWriter(job.outPath, job.dim);
  await writer.open();
  try {
    for (let b = 0; b < batches.length; b++) {
      const vectors = vectorBatches[b]!;
      for (let i = 0; i < batches[b].length; i++) {
        await writer.append(batches[b][i].id, Float32Array.from(vectors[i]));
      }
    }
    await writer.finish();
  } catch (err) {
    await writer.abort();
    throw err;
  }

  await writeMeta(job, provider, items.length);
  return { count: items.length, dim: job.dim, failures };
}

/** Sidecar metadata record. The store format has no room for metadata
 * without breaking the one-record-per-input-id contract, so the "__meta__"
 * record lives next to the file instead of inside it. */
async function writeMeta(job: ExportJob, provider: EmbeddingProvider, count: number) {
  const meta = {
    id: '__meta__',
    model: provider.model,
    target: job.target,
    dim: job.dim,
    count,
    preprocessing: 'collapse-whitespace-and-trim',
  };
  await writeFile(`${job.outPath}.meta.json`, JSON.stringify(meta, null, 2) + '\n');
}
