#!/usr/bin/env node
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { DEFAULT_DOC_DIM, DEFAULT_ENTITY_DIM, runExport } from './export.js';
import { DeterministicLocalProvider, HttpProvider, type EmbeddingProvider } from './provider.js';

async function main() {
  const argv = await yargs(hideBin(process.argv))
    .scriptName('embed-exporter')
    .option('corpus', { type: 'string', demandOption: true, describe: 'corpus JSON file' })
    .option('target', {
      choices: ['doc', 'entity'] as const,
      demandOption: true,
      describe: 'embed paper titles+abstracts or entity surfaces',
    })
    .option('out', { type: 'string', demandOption: true, describe: 'output vector store' })
    .option('dim', { type: 'number', describe: 'vector dimension (default 768 doc / 1536 entity)' })
    .option('provider', { choices: ['local', 'http'] as const, default: 'local' as const })
    .option('endpoint', {
      type: 'string',
      default: process.env.EMBED_ENDPOINT,
      describe: 'embeddings endpoint URL (http provider; env EMBED_ENDPOINT)',
    })
    .option('model', { type: 'string', default: 'local-hash' })
    .option('batch-size', { type: 'number', default: 32 })
    .option('max-concurrent', { type: 'number', default: 4 })
    .strict()
    .help()
    .parse();

  let provider: EmbeddingProvider;
  if (argv.provider === 'http') {
    if (!argv.endpoint) {
      console.error('http provider requires --endpoint or EMBED_ENDPOINT');
      process.exit(1);
    }
    provider = new HttpProvider({
      endpoint: argv.endpoint,
      model: argv.model,
      apiKey: process.env.EMBED_API_KEY,
    });
  } else {
    provider = new DeterministicLocalProvider(argv.model);
  }

  const dim = argv.dim ?? (argv.target === 'doc' ? DEFAULT_DOC_DIM : DEFAULT_ENTITY_DIM);
  try {
    const result = await runExport(
      {
        corpusPath: argv.corpus,
        target: argv.target,
        outPath: argv.out,
        dim,
        batchSize: argv['batch-size'],
        maxConcurrent: argv['max-concurrent'],
      },
      provider,
    );
    console.log(JSON.stringify({ count: result.count, dim: result.dim, out: argv.out }));
  } catch (err) {
    console.error((err as Error).message);
    process.exit(2);
  }
}

main();
