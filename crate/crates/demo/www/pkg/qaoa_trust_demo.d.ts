/* tslint:disable */
/* eslint-disable */

/**
 * A generated graph and its cut table.
 */
export class Instance {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Flat `[u0, v0, u1, v1, ...]`.
     */
    edges(): Uint32Array;
    landscape(res: number): Float64Array;
    maxCut(): number;
    constructor(family: string, n: number, seed: bigint);
    nodes(): number;
    search(gamma: number, beta: number, sigma_gamma: number, sigma_beta: number, alpha: number, t_base: number, u_med: number, u_iqr: number, seed: bigint): SearchOutcome;
}

export class SearchOutcome {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    best(): Float64Array;
    evals(): number;
    iterations(): number;
    ratio(): number;
    samples(): number;
    /**
     * The `K` seeds, flat; the first is the center.
     */
    seeds(): Float64Array;
    /**
     * Every evaluated angle pair, flat.
     */
    trace(): Float64Array;
    z(): number;
}

export function trustRegion(gamma: number, beta: number, sigma_gamma: number, sigma_beta: number, alpha: number, point_gamma: number, point_beta: number, count: number, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_instance_free: (a: number, b: number) => void;
    readonly __wbg_searchoutcome_free: (a: number, b: number) => void;
    readonly instance_edges: (a: number) => [number, number];
    readonly instance_landscape: (a: number, b: number) => [number, number, number, number];
    readonly instance_maxCut: (a: number) => number;
    readonly instance_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly instance_nodes: (a: number) => number;
    readonly instance_search: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: bigint) => [number, number, number];
    readonly searchoutcome_best: (a: number) => [number, number];
    readonly searchoutcome_evals: (a: number) => number;
    readonly searchoutcome_iterations: (a: number) => number;
    readonly searchoutcome_ratio: (a: number) => number;
    readonly searchoutcome_samples: (a: number) => number;
    readonly searchoutcome_seeds: (a: number) => [number, number];
    readonly searchoutcome_trace: (a: number) => [number, number];
    readonly searchoutcome_z: (a: number) => number;
    readonly trustRegion: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
