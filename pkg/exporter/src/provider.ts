import { createHash } from 'node:crypto';

export interface EmbeddingProvider {
  readonly model: string;
  /** One vector per input text, same order, all of length `dim`. */
  embed(texts: string[], dim: number): Promise<number[][]>;
}

/**
 * Offline stand-in for the remote encoders: a pure function of
 * (model, text, dim), so re-exports are byte-identical. Not intended to
 * approximate any real embedding space.
 */
export class DeterministicLocalProvider implements EmbeddingProvider {
  constructor(readonly model = 'local-hash') {}

  async embed(texts: string[], dim: number): Promise<number[][]> {
    return texts.map((t) => this.one(t, dim));
  }

  private one(text: string, dim: number): number[] {
    const digest = createHash('sha256').update(`${this.model}\x00${text}`).digest();
    let state = digest.readUInt32LE(0) ^ digest.readUInt32LE(4);
    // mulberry32
    const next = () => {
      state = (state + 0x6d2b79f5) | 0;
      let t = state;
      t = Math.imul(t ^ (t >>> 15), t | 1);
      t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
      return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
    const v = new Array<number>(dim);
    let norm = 0;
    for (let i = 0; i < dim; i++) {
      // Box-Muller from two uniforms
      const u = Math.max(next(), 1e-12);
      const g = Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * next());
      v[i] = g;
      norm += g * g;
    }
    norm = Math.sqrt(norm) || 1;
    for (let i = 0; i < dim; i++) v[i] /= norm;
    return v;
  }
}

export interface HttpProviderOptions {
  endpoint: string;
  model: string;
  apiKey?: string;
  maxRetries?: number;
  backoffMs?: number;
}

/** Client for an embeddings endpoint speaking the common
 * {model, input: string[]} -> {data: [{embedding}]} shape. */
export class HttpProvider implements EmbeddingProvider {
  readonly model: string;
  private readonly opts: Required<Omit<HttpProviderOptions, 'apiKey'>> & { apiKey?: string };

  constructor(opts: HttpProviderOptions) {
    this.model = opts.model;
    this.opts = { maxRetries: 3, backoffMs: 500, ...opts };
  }

  async embed(texts: string[], dim: number): Promise<number[][]> {
    if (texts.length === 0) return [];
    let lastErr: Error | null = null;
    for (let attempt = 0; attempt <= this.opts.maxRetries; attempt++) {
      if (attempt > 0) {
        await new Promise((r) => setTimeout(r, this.opts.backoffMs * 2 ** (attempt - 1)));
      }
      try {
        return await this.request(texts, dim);
      } catch (err) {
        lastErr = err as Error;
      }
    }
    throw new Error(`embedding request failed after retries: ${lastErr?.message}`);
  }

  private async request(texts: string[], dim: number): Promise<number[][]> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (this.opts.apiKey) headers.Authorization = `Bearer ${this.opts.apiKey}`;
    const res = await fetch(this.opts.endpoint, {
      method: 'POST',
      headers,
      body: JSON.stringify({ model: this.model, input: texts }),
    });
    if (!res.ok) throw new Error(`embeddings endpoint: HTTP ${res.status}`);
    const data = (await res.json()) as { data: { embedding: number[] }[] };
    if (!Array.isArray(data.data) || data.data.length !== texts.length) {
      throw new Error('embeddings endpoint: response length mismatch');
    }
    const out = data.data.map((d) => d.embedding);
    for (const v of out) {
      if (v.length !== dim) {
        throw new Error(`embeddings endpoint: got dim ${v.length}, expected ${dim}`);
      }
    }
    return out;
  }
}
