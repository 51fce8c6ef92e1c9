/* tslint:disable */
/* eslint-disable */

export class Session {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Per-triangle error indicators of the last solve, empty before solving.
     */
    indicators(): Float64Array;
    /**
     * Per-triangle `|u_h|` of the last solve, empty before solving.
     */
    magnitudes(): Float64Array;
    /**
     * `example` is 1 (disk) or 2 (U shape).
     */
    constructor(example: number, omega: number);
    /**
     * Marks with the maximum strategy and bisects; solves first if needed.
     */
    refine(): void;
    /**
     * Solves on the current mesh and returns `[dof, eps_h, e_h]`, with
     * `e_h = NaN` when no exact solution is known.
     */
    solve(): Float64Array;
    triangles(): Uint32Array;
    truncation(): number;
    /**
     * Vertex coordinates as `x0, y0, x1, y1, ...`.
     */
    vertices(): Float64Array;
}

/**
 * `Re Lambda_n, Im Lambda_n` for `n = 0..=n_max` at radius `r`, flattened.
 */
export function lambda_curve(omega: number, lambda: number, mu: number, r: number, n_max: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_session_free: (a: number, b: number) => void;
    readonly lambda_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly session_indicators: (a: number) => [number, number];
    readonly session_magnitudes: (a: number) => [number, number];
    readonly session_new: (a: number, b: number) => [number, number, number];
    readonly session_refine: (a: number) => [number, number];
    readonly session_solve: (a: number) => [number, number, number, number];
    readonly session_triangles: (a: number) => [number, number];
    readonly session_truncation: (a: number) => number;
    readonly session_vertices: (a: number) => [number, number];
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
