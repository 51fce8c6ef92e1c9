/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_session_free: (a: number, b: number) => void;
export const lambda_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const session_indicators: (a: number) => [number, number];
export const session_magnitudes: (a: number) => [number, number];
export const session_new: (a: number, b: number) => [number, number, number];
export const session_refine: (a: number) => [number, number];
export const session_solve: (a: number) => [number, number, number, number];
export const session_triangles: (a: number) => [number, number];
export const session_truncation: (a: number) => number;
export const session_vertices: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
