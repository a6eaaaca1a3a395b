/**
 * Token sampling primitives: seeded RNG, temperature softmax, full-softmax
 * entropy, and nucleus (top-p) sampling.
 */

/** Deterministic 32-bit RNG (mulberry32); identical streams on every platform. */
export function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** FNV-1a hash of a string, for deriving sub-seeds and vocabulary buckets. */
export function hash32(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/**
 * Temperature softmax over logits. temperature = 0 degenerates to a one-hot
 * distribution on the argmax (greedy decoding limit).
 */
export function softmax(logits: Float64Array, temperature: number): Float64Array {
  const probs = new Float64Array(logits.length);
  if (temperature <= 0) {
    let best = 0;
    for (let i = 1; i < logits.length; i++) {
      if (logits[i] > logits[best]) best = i;
    }
    probs[best] = 1;
    return probs;
  }
  let max = -Infinity;
  for (const logit of logits) max = Math.max(max, logit);
  let total = 0;
  for (let i = 0; i < logits.length; i++) {
    probs[i] = Math.exp((logits[i] - max) / temperature);
    total += probs[i];
  }
  for (let i = 0; i < probs.length; i++) probs[i] /= total;
  return probs;
}

/** Shannon entropy in nats of a full distribution, with 0 * ln 0 = 0. */
export function entropy(probs: Float64Array): number {
  let h = 0;
  for (const p of probs) {
    if (p > 0) h -= p * Math.log(p);
  }
  return h + 0;
}

/**
 * Nucleus sampling: draw from the smallest probability-sorted prefix whose
 * mass reaches topP (always at least one token), renormalized.
 */
export function sampleTopP(probs: Float64Array, topP: number, rng: () => number): number {
  const order = Array.from(probs.keys()).sort((a, b) => probs[b] - probs[a] || a - b);
  let mass = 0;
  let cut = 0;
  while (cut < order.length) {
    mass += probs[order[cut]];
    cut += 1;
    if (mass >= topP) break;
  }
  const u = rng() * mass;
  let cumulative = 0;
  for (let i = 0; i < cut; i++) {
    cumulative += probs[order[i]];
    if (u < cumulative) return order[i];
  }
  return order[cut - 1];
}
