/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_race_free: (a: number, b: number) => void;
export const agreementMatrix: (a: number, b: bigint, c: number) => [number, number, number, number];
export const generateStream: (a: number, b: number, c: number, d: bigint, e: number) => [number, number, number, number];
export const race_columns: (a: number) => [number, number];
export const race_done: (a: number) => number;
export const race_modeLabels: (a: number) => [number, number];
export const race_new: (a: number, b: number, c: number, d: bigint, e: number, f: number, g: number) => [number, number, number];
export const race_position: (a: number) => number;
export const race_step: (a: number, b: number) => [number, number, number, number];
export const race_total: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
