/* tslint:disable */
/* eslint-disable */

/**
 * Cell averages on `[0, 2π)`: initial bump, fractional limit at `t`,
 * diffusion limit at `t`, each `cells` long.
 */
export function limitProfiles(alpha: number, t: number, cells: number): Float64Array;

/**
 * Nine log-spaced times in `[10, 1000]`, the nine MSD values, then the fitted slope.
 */
export function msdCurve(alpha: number, epsilon: number, particles: number, seed: bigint): Float64Array;

/**
 * `E_α(-λ t^α)` at `points` equally spaced times on `[0, t_max]`.
 */
export function relaxationCurve(alpha: number, lambda: number, t_max: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly limitProfiles: (a: number, b: number, c: number) => [number, number, number, number];
    readonly msdCurve: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly relaxationCurve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
