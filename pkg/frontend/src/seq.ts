/** Request pacing for slider-driven views.
 *
 * Sliders fire on every pixel of movement; the service should see one
 * request per pause, and out-of-order responses must never overwrite a
 * newer render.
 */

/** Milliseconds a slider must rest before its request is sent. */
export const SLIDER_DEBOUNCE_MS = 150;

/** Trailing-edge debounce: `fn` runs once the calls stop for `ms`,
 * with the arguments of the last call. */
export function debounce<A extends unknown[]>(
  ms: number,
  fn: (...args: A) => void,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = undefined;
      fn(...args);
    }, ms);
  };
}

/** Monotone ticket counter making concurrent responses last-write-wins.
 *
 * Take a ticket with `issue()` when a request starts and call
 * `accept(ticket)` when its response arrives: the answer is true exactly
 * when no newer response has been accepted yet, so a stale reply is
 * dropped instead of clobbering the screen.
 */
export class Sequencer {
  private issued = 0;
  private accepted = 0;

  issue(): number {
    this.issued += 1;
    return this.issued;
  }

  accept(ticket: number): boolean {
    if (ticket <= this.accepted) return false;
    this.accepted = ticket;
    return true;
  }

  /** Ticket of the most recently accepted response (0 before any). */
  get current(): number {
    return this.accepted;
  }
}
