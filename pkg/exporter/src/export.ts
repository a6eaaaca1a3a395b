/**
 * Record export: sample M candidates per prompt and write the engine's
 * line-delimited record format.
 *
 * Prompts file: one JSON object per line with `prompt` (string) and
 * `references` (non-empty string array). Prompts that fail to parse or
 * generate are skipped with a logged reason; more than 10% skips fails the
 * whole export.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";

import { TinyCausalLM } from "./model.js";
import { hash32 } from "./sampling.js";
import { bagOfWordsF1, maxOverReferences, pairwiseMatrix, SimilarityScorer } from "./similarity.js";

export interface ExportConfig {
  model: string;
  promptsPath: string;
  outPath: string;
  m: number;
  maxNewTokens: number;
  temperature: number;
  topP: number;
  seed: number;
  scorer?: SimilarityScorer;
  log?: (message: string) => void;
}

export const DEFAULTS = {
  model: "toy-v1",
  m: 10,
  maxNewTokens: 12,
  temperature: 1.0,
  topP: 0.95,
  seed: 0,
};

interface PromptEntry {
  prompt: string;
  references: string[];
}

export interface ExportResult {
  written: number;
  skipped: number;
}

function parsePromptLine(raw: string, lineNo: number): PromptEntry {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new Error(`line ${lineNo}: invalid JSON`);
  }
  const entry = obj as Partial<PromptEntry>;
  if (typeof entry.prompt !== "string" || entry.prompt.length === 0) {
    throw new Error(`line ${lineNo}: missing prompt`);
  }
  if (
    !Array.isArray(entry.references) ||
    entry.references.length === 0 ||
    !entry.references.every((r) => typeof r === "string")
  ) {
    throw new Error(`line ${lineNo}: missing references`);
  }
  return { prompt: entry.prompt, references: entry.references };
}

function buildRecord(
  config: ExportConfig,
  model: TinyCausalLM,
  scorer: SimilarityScorer,
  entry: PromptEntry,
  index: number,
  idStem: string,
) {
  const decoding = {
    temperature: config.temperature,
    top_p: config.topP,
    max_new_tokens: config.maxNewTokens,
  };
  const candidates = [];
  for (let sample = 0; sample < config.m; sample++) {
    const sampleSeed = hash32(`${config.seed}:${index}:${sample}:${entry.prompt}`);
    const generation = model.generate(
      entry.prompt,
      { temperature: config.temperature, topP: config.topP, maxNewTokens: config.maxNewTokens },
      sampleSeed,
    );
    if (generation.tokens.length === 0) {
      throw new Error(`candidate ${sample}: empty generation`);
    }
    candidates.push({
      text: generation.text,
      tokens: generation.tokens,
      token_entropies: generation.steps.map((s) => s.entropy),
      token_distributions: generation.steps.map((s) => s.distribution),
      ref_similarity: maxOverReferences(scorer, generation.text, entry.references),
    });
  }
  return {
    id: `${idStem}-${String(index).padStart(4, "0")}`,
    prompt: entry.prompt,
    references: entry.references,
    decoding,
    candidates,
    pairwise_similarity: pairwiseMatrix(scorer, candidates.map((c) => c.text)),
    model: config.model,
  };
}

export function exportRecords(config: ExportConfig): ExportResult {
  const log = config.log ?? ((message: string) => console.error(message));
  const scorer = config.scorer ?? bagOfWordsF1;
  const model = new TinyCausalLM(config.model);
  const idStem = basename(config.promptsPath).replace(/\.[^.]*$/, "");
  const rawLines = readFileSync(config.promptsPath, "utf-8")
    .split("\n")
    .map((line, i) => [i + 1, line.trim()] as const)
    .filter(([, line]) => line.length > 0);
  if (rawLines.length === 0) {
    throw new Error(`no prompts in ${config.promptsPath}`);
  }
  const lines: string[] = [];
  let skipped = 0;
  for (const [lineNo, raw] of rawLines) {
    try {
      const entry = parsePromptLine(raw, lineNo);
      const record = buildRecord(config, model, scorer, entry, lineNo - 1, idStem);
      lines.push(JSON.stringify(record));
    } catch (error) {
      skipped += 1;
      log(`skipping prompt at line ${lineNo}: ${(error as Error).message}`);
    }
  }
  if (skipped > 0.1 * rawLines.length) {
    throw new Error(`skipped ${skipped} of ${rawLines.length} prompts (over 10%)`);
  }
  writeFileSync(config.outPath, lines.map((line) => line + "\n").join(""), "utf-8");
  return { written: lines.length, skipped };
}
