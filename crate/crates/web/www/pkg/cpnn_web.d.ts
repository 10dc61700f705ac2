/* tslint:disable */
/* eslint-disable */

/**
 * All three architectures learning the same stream, advanced a few points at a time.
 */
export class Race {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Columns currently held by each lane.
     */
    columns(): Uint32Array;
    done(): boolean;
    modeLabels(): string[];
    constructor(spec: string, points_per_concept: number, seed: bigint, hidden: number, epochs: number, lr: number);
    position(): number;
    step(max_points: number): Float64Array;
    total(): number;
}

export function agreementMatrix(n: number, seed: bigint, step_max: number): Float64Array;

export function generateStream(spec: string, points_per_concept: number, seed: bigint, step_max: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_race_free: (a: number, b: number) => void;
    readonly agreementMatrix: (a: number, b: bigint, c: number) => [number, number, number, number];
    readonly generateStream: (a: number, b: number, c: number, d: bigint, e: number) => [number, number, number, number];
    readonly race_columns: (a: number) => [number, number];
    readonly race_done: (a: number) => number;
    readonly race_modeLabels: (a: number) => [number, number];
    readonly race_new: (a: number, b: number, c: number, d: bigint, e: number, f: number, g: number) => [number, number, number];
    readonly race_position: (a: number) => number;
    readonly race_step: (a: number, b: number) => [number, number, number, number];
    readonly race_total: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
