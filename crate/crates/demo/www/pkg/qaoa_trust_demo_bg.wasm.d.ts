/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_instance_free: (a: number, b: number) => void;
export const __wbg_searchoutcome_free: (a: number, b: number) => void;
export const instance_edges: (a: number) => [number, number];
export const instance_landscape: (a: number, b: number) => [number, number, number, number];
export const instance_maxCut: (a: number) => number;
export const instance_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const instance_nodes: (a: number) => number;
export const instance_search: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: bigint) => [number, number, number];
export const searchoutcome_best: (a: number) => [number, number];
export const searchoutcome_evals: (a: number) => number;
export const searchoutcome_iterations: (a: number) => number;
export const searchoutcome_ratio: (a: number) => number;
export const searchoutcome_samples: (a: number) => number;
export const searchoutcome_seeds: (a: number) => [number, number];
export const searchoutcome_trace: (a: number) => [number, number];
export const searchoutcome_z: (a: number) => number;
export const trustRegion: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
