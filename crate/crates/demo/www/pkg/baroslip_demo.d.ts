/* tslint:disable */
/* eslint-disable */

export class PsdStream {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Per-frame high-band power (NaN before the first full window).
     */
    features(trace: Trace): Float64Array;
    fit_f1(): number;
    /**
     * Fits the threshold in place; takes a moment for short windows.
     */
    constructor(window_len: number);
    /**
     * Frame indices where the two-in-a-row rule registered an event.
     */
    registrations(trace: Trace): Uint32Array;
    set_threshold(threshold: number): void;
    threshold(): number;
}

export class Spectrum {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    density(): Float64Array;
    frequencies(): Float64Array;
}

export class Trace {
    free(): void;
    [Symbol.dispose](): void;
    channel(c: number): Float64Array;
    channels(): number;
    is_empty(): boolean;
    /**
     * 1 for slip frames.
     */
    labels(): Uint8Array;
    len(): number;
    constructor(surface: string, slip_type: string, direction: string, speed: number, seconds: number, seed: number);
    onsets(): Uint32Array;
}

/**
 * Welch density of one channel over frames `[start, start + len)`.
 */
export function welch(trace: Trace, channel: number, start: number, len: number, segment: number): Spectrum;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_psdstream_free: (a: number, b: number) => void;
    readonly __wbg_spectrum_free: (a: number, b: number) => void;
    readonly __wbg_trace_free: (a: number, b: number) => void;
    readonly psdstream_features: (a: number, b: number) => [number, number, number, number];
    readonly psdstream_fit_f1: (a: number) => number;
    readonly psdstream_new: (a: number) => [number, number, number];
    readonly psdstream_registrations: (a: number, b: number) => [number, number, number, number];
    readonly psdstream_set_threshold: (a: number, b: number) => void;
    readonly psdstream_threshold: (a: number) => number;
    readonly spectrum_density: (a: number) => [number, number];
    readonly spectrum_frequencies: (a: number) => [number, number];
    readonly trace_channel: (a: number, b: number) => [number, number];
    readonly trace_channels: (a: number) => number;
    readonly trace_is_empty: (a: number) => number;
    readonly trace_labels: (a: number) => [number, number];
    readonly trace_len: (a: number) => number;
    readonly trace_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
    readonly trace_onsets: (a: number) => [number, number];
    readonly welch: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
