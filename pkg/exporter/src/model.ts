/**
 * Built-in small causal language model.
 *
 * A second-order autoregressive scorer over a fixed word vocabulary: logits
 * for the next token come from seeded bigram/trigram affinity tables plus a
 * prompt-conditioning bias, and the predictive distribution is the full
 * temperature softmax over the vocabulary. Self-contained and deterministic,
 * so exports are reproducible anywhere; swap in an API-backed generator for
 * real models.
 */

import { entropy, hash32, makeRng, sampleTopP, softmax } from "./sampling.js";

export const EOS = "</s>";

const WORDS = [
  "the", "a", "an", "of", "in", "on", "and", "or", "is", "was",
  "city", "river", "mountain", "capital", "country", "island", "ocean", "desert",
  "king", "queen", "battle", "treaty", "scientist", "theory", "element", "planet",
  "novel", "author", "painting", "artist", "symphony", "composer",
  "first", "second", "largest", "oldest", "famous", "ancient", "modern", "northern",
  "france", "japan", "brazil", "egypt", "paris", "tokyo", "cairo",
];

export interface GenerationStep {
  token: string;
  /** Full-vocabulary predictive distribution the token was drawn from. */
  distribution: number[];
  /** Entropy (nats) of that distribution. */
  entropy: number;
}

export interface Generation {
  tokens: string[];
  text: string;
  steps: GenerationStep[];
}

export interface DecodingOptions {
  temperature: number;
  topP: number;
  maxNewTokens: number;
}

export class TinyCausalLM {
  readonly vocab: string[];
  private readonly bigram: Float64Array;
  private readonly trigram: Float64Array;
  private readonly size: number;

  constructor(readonly modelId: string) {
    this.vocab = [...WORDS, EOS];
    this.size = this.vocab.length;
    const rng = makeRng(hash32(modelId));
    this.bigram = new Float64Array(this.size * this.size);
    this.trigram = new Float64Array(this.size * this.size);
    for (let i = 0; i < this.bigram.length; i++) this.bigram[i] = rng() * 6 - 3;
    for (let i = 0; i < this.trigram.length; i++) this.trigram[i] = rng() * 4 - 2;
  }

  private tokenIndex(word: string): number {
    const position = this.vocab.indexOf(word);
    return position >= 0 ? position : hash32(word) % (this.size - 1);
  }

  private promptBias(prompt: string): Float64Array {
    const bias = new Float64Array(this.size);
    const words = prompt.toLowerCase().split(/\s+/).filter(Boolean);
    for (const word of words) {
      const row = this.tokenIndex(word) * this.size;
      for (let v = 0; v < this.size; v++) bias[v] += 0.4 * this.trigram[row + v];
    }
    return bias;
  }

  private logits(bias: Float64Array, context: number[], position: number): Float64Array {
    const out = new Float64Array(this.size);
    const last = context[context.length - 1];
    const prev = context[context.length - 2];
    for (let v = 0; v < this.size; v++) {
      out[v] = bias[v];
      if (last !== undefined) out[v] += this.bigram[last * this.size + v];
      if (prev !== undefined) out[v] += 0.5 * this.trigram[prev * this.size + v];
    }
    if (position === 0) out[this.size - 1] = -Infinity; // never emit EOS as the only token
    return out;
  }

  /** Sample one candidate; deterministic in (modelId, prompt, sampleSeed). */
  generate(prompt: string, options: DecodingOptions, sampleSeed: number): Generation {
    const rng = makeRng(sampleSeed);
    const bias = this.promptBias(prompt);
    const context = prompt
      .toLowerCase()
      .split(/\s+/)
      .filter(Boolean)
      .map((w) => this.tokenIndex(w));
    const tokens: string[] = [];
    const steps: GenerationStep[] = [];
    for (let t = 0; t < options.maxNewTokens; t++) {
      const probs = softmax(this.logits(bias, context, t), options.temperature);
      const choice =
        options.temperature <= 0 ? probs.indexOf(1) : sampleTopP(probs, options.topP, rng);
      if (choice === this.size - 1) break; // EOS: steps cover emitted tokens only
      steps.push({
        token: this.vocab[choice],
        distribution: Array.from(probs),
        entropy: entropy(probs),
      });
      tokens.push(this.vocab[choice]);
      context.push(choice);
    }
    return { tokens, text: tokens.join(" "), steps };
  }
}
