#!/usr/bin/env node
/**
 * Usage:
 *   node dist/cli.js --prompts prompts/smoke.jsonl --out records.jsonl \
 *     [--model toy-v1] [--m 10] [--max-new-tokens 12] [--temperature 1.0] \
 *     [--top-p 0.95] [--seed 0]
 */

import { DEFAULTS, exportRecords } from "./export.js";

function parseArgs(argv: string[]) {
  const options: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`bad argument ${flag}`);
    }
    options[flag.slice(2)] = value;
  }
  return options;
}

function main(): number {
  let options: Record<string, string>;
  try {
    options = parseArgs(process.argv.slice(2));
  } catch (error) {
    console.error((error as Error).message);
    return 2;
  }
  const promptsPath = options["prompts"];
  const outPath = options["out"];
  if (!promptsPath || !outPath) {
    console.error("required: --prompts <file> --out <file>");
    return 2;
  }
  try {
    const result = exportRecords({
      model: options["model"] ?? DEFAULTS.model,
      promptsPath,
      outPath,
      m: Number(options["m"] ?? DEFAULTS.m),
      maxNewTokens: Number(options["max-new-tokens"] ?? DEFAULTS.maxNewTokens),
      temperature: Number(options["temperature"] ?? DEFAULTS.temperature),
      topP: Number(options["top-p"] ?? DEFAULTS.topP),
      seed: Number(options["seed"] ?? DEFAULTS.seed),
    });
    console.error(`wrote ${result.written} records to ${outPath} (${result.skipped} skipped)`);
    return 0;
  } catch (error) {
    console.error((error as Error).message);
    return 1;
  }
}

process.exitCode = main();
