/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_noisingdemo_free: (a: number, b: number) => void;
export const __wbg_spectrumfit_free: (a: number, b: number) => void;
export const fit_generated: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
export const noise_rgba: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const noisingdemo_frame: (a: number, b: number, c: number) => [number, number, number, number];
export const noisingdemo_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const noisingdemo_steps: (a: number) => number;
export const noisingdemo_theta: (a: number, b: number) => [number, number, number];
export const spectrumfit_amplitude: (a: number) => number;
export const spectrumfit_delta: (a: number) => number;
export const spectrumfit_log_gamma: (a: number) => [number, number];
export const spectrumfit_log_k: (a: number) => [number, number];
export const spectrumfit_masked: (a: number) => [number, number];
export const spectrumfit_r2: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
