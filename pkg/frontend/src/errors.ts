/** Typed errors so host applications can catch binding failures precisely. */

/** Input rejected before any work was attempted (shape, NaN/Inf, range). */
export class ValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ValidationError";
  }
}

/**
 * The core process reported a failure. Carries the core's own error
 * message (its stderr) and exit code; never aborts the host process.
 */
export class CoreError extends Error {
  readonly exitCode: number | null;
  readonly stderr: string;

  constructor(message: string, exitCode: number | null, stderr: string) {
    super(message);
    this.name = "CoreError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}
