/* tslint:disable */
/* eslint-disable */

/**
 * `P_0[τ ≤ t]` for Brownian motion with drift `mu` and volatility `sigma`,
 * barrier `level`, window `window`, at `points` times evenly spaced on
 * `(0, t_max]`. The chain lives on `n` uniform steps over `level ± 6σ√t_max`.
 */
export function cdf_curve(mu: number, sigma: number, level: number, window: number, below: boolean, t_max: number, points: number, n: number): Float64Array;

/**
 * Convergence ladder of the down-and-in call (`S₀ = L = 90`, `T = 1`,
 * `r = 0.05`) on piecewise-uniform grids. Returns rows
 * `[n, δ_max, value, |error|, ms]` flattened, followed by the fitted order.
 * Errors are measured against the Richardson value of the two finest levels.
 */
export function convergence(sigma: number, window: number, strike: number, ladder: Uint32Array): Float64Array;

/**
 * Down-and-in call price for each window in `windows` on an `n`-step grid.
 */
export function price_vs_window(sigma: number, strike: number, windows: Float64Array, n: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly cdf_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly convergence: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly price_vs_window: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
