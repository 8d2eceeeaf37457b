/* tslint:disable */
/* eslint-disable */

/**
 * A clean test image with one white-noise and one cloud-noise draw, rendered
 * at any timestep of a linear-beta schedule.
 */
export class NoisingDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * RGBA frame at timestep `t` (0 is the clean image).
     */
    frame(t: number, cloud: boolean): Uint8Array;
    constructor(side: number, delta: number, steps: number, seed: bigint);
    theta(t: number): number;
    readonly steps: number;
}

/**
 * Spectral fit of a generated ensemble.
 */
export class SpectrumFit {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    log_gamma(): Float64Array;
    log_k(): Float64Array;
    masked(): Uint8Array;
    readonly amplitude: number;
    readonly delta: number;
    readonly r2: number;
}

/**
 * Draws `count` samples and fits their spectral diagonal.
 */
export function fit_generated(side: number, delta: number, oversample: number, count: number, cross_halfwidth: number, seed: bigint): SpectrumFit;

/**
 * One noise sample as RGBA. `oversample <= 1` gives the periodic variant.
 */
export function noise_rgba(side: number, delta: number, oversample: number, seed: bigint): Uint8Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_noisingdemo_free: (a: number, b: number) => void;
    readonly __wbg_spectrumfit_free: (a: number, b: number) => void;
    readonly fit_generated: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
    readonly noise_rgba: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly noisingdemo_frame: (a: number, b: number, c: number) => [number, number, number, number];
    readonly noisingdemo_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly noisingdemo_steps: (a: number) => number;
    readonly noisingdemo_theta: (a: number, b: number) => [number, number, number];
    readonly spectrumfit_amplitude: (a: number) => number;
    readonly spectrumfit_delta: (a: number) => number;
    readonly spectrumfit_log_gamma: (a: number) => [number, number];
    readonly spectrumfit_log_k: (a: number) => [number, number];
    readonly spectrumfit_masked: (a: number) => [number, number];
    readonly spectrumfit_r2: (a: number) => number;
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
