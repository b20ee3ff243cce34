/* tslint:disable */
/* eslint-disable */

export function nominate(input: string): string;

/**
 * Canvas-ready RGBA bytes; width and height come from `skew`.
 */
export function page_pixels(skew: number, lines: number, correction: number): Uint8Array;

export function page_size(skew: number, lines: number, correction: number): Uint32Array;

export function score(prediction: string, target: string): string;

export function skew(skew: number, lines: number, range: number, step: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly nominate: (a: number, b: number) => [number, number, number, number];
    readonly page_pixels: (a: number, b: number, c: number) => [number, number];
    readonly page_size: (a: number, b: number, c: number) => [number, number];
    readonly score: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly skew: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
