/* tslint:disable */
/* eslint-disable */

/**
 * Verdict for the two-species model that is neutral in environment 1
 * and competitive in environment 2.
 *
 * `p` holds `a1_1, a2_1, a1_2, a2_2, b1_2, b2_2, c1_2, c2_2, q12, q21`.
 * Returns `{verdict, qualifiers, weights, rows}` where each row has the
 * face (1-based species), whether it carries a measure, the method and
 * the invasion rates.
 */
export function classify_expl2d(p: Float64Array): string;

/**
 * Invariant law of the one-species model on `(0, inf)`.
 *
 * Returns `{kind, x, h1, h2, masses, support}` for a density or
 * `{kind: "PointMass", x, nu}`.
 */
export function invariant_density(a1: number, a2: number, b1: number, b2: number, q12: number, q21: number, points: number): string;

/**
 * One path of the one-species model, sampled about 1000 times.
 *
 * Returns `{t, x, k, jumps, lambda0}` with `k` 1-based and `lambda0` the
 * growth rate at the origin.
 */
export function simulate_path(a1: number, a2: number, b1: number, b2: number, q12: number, q21: number, x0: number, t_max: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly classify_expl2d: (a: number, b: number) => [number, number, number, number];
    readonly invariant_density: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly simulate_path: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
