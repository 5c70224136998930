/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_psdstream_free: (a: number, b: number) => void;
export const __wbg_spectrum_free: (a: number, b: number) => void;
export const __wbg_trace_free: (a: number, b: number) => void;
export const psdstream_features: (a: number, b: number) => [number, number, number, number];
export const psdstream_fit_f1: (a: number) => number;
export const psdstream_new: (a: number) => [number, number, number];
export const psdstream_registrations: (a: number, b: number) => [number, number, number, number];
export const psdstream_set_threshold: (a: number, b: number) => void;
export const psdstream_threshold: (a: number) => number;
export const spectrum_density: (a: number) => [number, number];
export const spectrum_frequencies: (a: number) => [number, number];
export const trace_channel: (a: number, b: number) => [number, number];
export const trace_channels: (a: number) => number;
export const trace_is_empty: (a: number) => number;
export const trace_labels: (a: number) => [number, number];
export const trace_len: (a: number) => number;
export const trace_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
export const trace_onsets: (a: number) => [number, number];
export const welch: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
