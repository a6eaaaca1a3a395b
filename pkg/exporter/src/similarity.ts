/**
 * Candidate/reference similarity scoring.
 *
 * Offline default is the engine-documented bag-of-words F1 fallback; a
 * cross-encoder service can be substituted by providing another
 * SimilarityScorer.
 */

export type SimilarityScorer = (a: string, b: string) => number;

function bagOfWords(text: string): Map<string, number> {
  const counts = new Map<string, number>();
  const normalized = text.toLowerCase().replace(/[^\p{L}\p{N}]+/gu, " ");
  for (const token of normalized.split(" ")) {
    if (token) counts.set(token, (counts.get(token) ?? 0) + 1);
  }
  return counts;
}

/** Multiset token F1 in [0, 1]; two empty texts count as identical. */
export const bagOfWordsF1: SimilarityScorer = (a, b) => {
  const bagA = bagOfWords(a);
  const bagB = bagOfWords(b);
  let totalA = 0;
  let totalB = 0;
  let overlap = 0;
  for (const n of bagA.values()) totalA += n;
  for (const n of bagB.values()) totalB += n;
  for (const [token, n] of bagA) overlap += Math.min(n, bagB.get(token) ?? 0);
  if (totalA + totalB === 0) return 1;
  return (2 * overlap) / (totalA + totalB);
};

export function maxOverReferences(scorer: SimilarityScorer, text: string, references: string[]): number {
  let best = 0;
  for (const reference of references) best = Math.max(best, scorer(text, reference));
  return best;
}

export function pairwiseMatrix(scorer: SimilarityScorer, texts: string[]): number[][] {
  const m = texts.length;
  const matrix = Array.from({ length: m }, () => new Array<number>(m).fill(1));
  for (let i = 0; i < m; i++) {
    for (let j = i + 1; j < m; j++) {
      const value = scorer(texts[i], texts[j]);
      matrix[i][j] = value;
      matrix[j][i] = value;
    }
  }
  return matrix;
}
