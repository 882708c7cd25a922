/**
 * Playback over a finished History: a virtual clock mapping wall time to
 * stream time, with speed multiplier, scrubbing, and a displayed timer
 * that can start at an offset and tick at its own rate.
 */

import { History } from "./history.js";

export interface TimerConfig {
  /** value shown at stream start */
  startOffset: number;
  /** displayed units per second of stream time */
  incrementsPerSecond: number;
}

export class Playback {
  speed = 1;
  timer: TimerConfig = { startOffset: 0, incrementsPerSecond: 1 };

  private playing = false;
  /** stream time at the last play/scrub event */
  private baseT: number;
  /** wall time (ms) of the last play/scrub event */
  private baseWall = 0;

  constructor(public readonly history: History) {
    this.baseT = this.startT;
  }

  get startT(): number {
    return this.history.frames.length ? this.history.frames[0].t : 0;
  }

  get endT(): number {
    return this.history.frames.length
      ? this.history.frames[this.history.frames.length - 1].t
      : 0;
  }

  get isPlaying(): boolean {
    return this.playing;
  }

  /** Current stream time given the wall clock (ms). */
  currentT(nowMs: number): number {
    if (!this.playing) return this.baseT;
    const t = this.baseT + ((nowMs - this.baseWall) / 1000) * this.speed;
    return Math.min(t, this.endT);
  }

  /** Frame index to draw at the given wall time; -1 before the first frame. */
  frameAt(nowMs: number): number {
    return this.history.frameIndexAt(this.currentT(nowMs));
  }

  /** Displayed timer value at the given wall time. */
  timerValue(nowMs: number): number {
    return this.timer.startOffset + (this.currentT(nowMs) - this.startT) * this.timer.incrementsPerSecond;
  }

  play(nowMs: number): void {
    if (this.playing) return;
    if (this.baseT >= this.endT) this.baseT = this.startT; // restart from the top
    this.baseWall = nowMs;
    this.playing = true;
  }

  pause(nowMs: number): void {
    if (!this.playing) return;
    this.baseT = this.currentT(nowMs);
    this.playing = false;
  }

  scrub(t: number, nowMs: number): void {
    this.baseT = Math.max(this.startT, Math.min(this.endT, t));
    this.baseWall = nowMs;
  }

  setSpeed(speed: number, nowMs: number): void {
    if (!(speed > 0)) throw new Error("speed must be > 0");
    // rebase so the current position is unchanged
    this.baseT = this.currentT(nowMs);
    this.baseWall = nowMs;
    this.speed = speed;
  }

  /** Wall-clock duration (s) of a full run at the current speed. */
  runDuration(): number {
    return (this.endT - this.startT) / this.speed;
  }
}
