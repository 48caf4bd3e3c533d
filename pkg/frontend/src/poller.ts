/**
 * Fixed-interval job polling (1 s): simple and stateless on the server
 * side, no push channel needed. Stops itself on terminal states.
 */

export interface PollHandle {
  stop(): void;
}

export type Scheduler = {
  set(fn: () => void, ms: number): unknown;
  clear(id: unknown): void;
};

const realScheduler: Scheduler = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (id) => clearTimeout(id as Parameters<typeof clearTimeout>[0]),
};

export function poll(
  tick: () => Promise<boolean>,
  intervalMs = 1000,
  scheduler: Scheduler = realScheduler,
): PollHandle {
  let stopped = false;
  let timer: unknown = null;

  const step = async () => {
    if (stopped) return;
    let keepGoing = true;
    try {
      keepGoing = await tick();
    } catch {
      keepGoing = true; // transient errors: keep polling
    }
    if (!stopped && keepGoing) {
      timer = scheduler.set(step, intervalMs);
    }
  };

  timer = scheduler.set(step, 0);
  return {
    stop() {
      stopped = true;
      if (timer !== null) scheduler.clear(timer);
    },
  };
}
