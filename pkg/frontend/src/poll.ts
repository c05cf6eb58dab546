/**
 * Polling with stale-response discarding.
 *
 * Responses can land out of order when the network hiccups. Each request
 * takes a monotonic token; a response is applied only if nothing newer
 * has been applied already, so a slow round one can never overwrite the
 * report from round two.
 */

export class TokenGate {
  private next = 1;
  private newest = 0;

  issue(): number {
    return this.next++;
  }

  /** True exactly once per token, and only while it is still the newest. */
  accept(token: number): boolean {
    if (token <= this.newest) return false;
    this.newest = token;
    return true;
  }
}

/**
 * One poll round. Returns false if the response arrived stale and was
 * dropped, true if `apply` ran.
 */
export async function pollOnce<T>(
  gate: TokenGate,
  request: () => Promise<T>,
  apply: (result: T) => void,
): Promise<boolean> {
  const token = gate.issue();
  const result = await request();
  if (!gate.accept(token)) return false;
  apply(result);
  return true;
}

/** setInterval wrapper so main.ts owns no timer bookkeeping. */
export function startPolling(tick: () => void, intervalMs: number): () => void {
  tick();
  const id = setInterval(tick, intervalMs);
  return () => clearInterval(id);
}
