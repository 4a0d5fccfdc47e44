import { describe, expect, test } from "vitest";

import { DECAY_MS, InputTracker } from "../src/input.js";

describe("InputTracker", () => {
  test("no keys gives (0,0)", () => {
    const tr = new InputTracker(2.0);
    expect(tr.sample(0)).toEqual([0, 0]);
  });

  test("held keys map to clamp-scaled axes, with y up", () => {
    const tr = new InputTracker(2.0);
    tr.press("ArrowLeft");
    expect(tr.sample(0)).toEqual([-2, 0]);
    tr.press("KeyW");
    expect(tr.sample(10)).toEqual([-2, 2]);
    tr.scale = 0.5;
    expect(tr.sample(20)).toEqual([-1, 1]);
  });

  test("WASD and arrows are interchangeable", () => {
    const tr = new InputTracker(2.0);
    tr.press("KeyD");
    expect(tr.sample(0)).toEqual([2, 0]);
    tr.release("KeyD");
    tr.press("ArrowRight");
    expect(tr.sample(1000)).toEqual([2, 0]);
  });

  test("opposing keys cancel immediately, no decay ramp", () => {
    const tr = new InputTracker(2.0);
    tr.press("ArrowLeft");
    expect(tr.sample(0)).toEqual([-2, 0]);
    tr.press("ArrowRight");
    expect(tr.sample(1)).toEqual([0, 0]);
    tr.release("ArrowRight");
    expect(tr.sample(2)).toEqual([-2, 0]);
  });

  test("release decays linearly to zero over the decay window", () => {
    const tr = new InputTracker(2.0);
    tr.press("ArrowLeft");
    tr.sample(0);
    tr.release("ArrowLeft");
    const atRelease = tr.sample(100);
    expect(atRelease[0]).toBeCloseTo(-2, 12); // ramp starts at the release sample
    expect(tr.sample(100 + DECAY_MS / 2)[0]).toBeCloseTo(-1, 12);
    expect(Math.abs(tr.sample(100 + DECAY_MS)[0]!)).toBe(0);
    const settled = tr.sample(100 + 10 * DECAY_MS);
    expect(Math.abs(settled[0]!)).toBe(0);
    expect(Math.abs(settled[1]!)).toBe(0);
  });

  test("stick input overrides keys and respects the clamp", () => {
    const tr = new InputTracker(2.0);
    tr.press("ArrowUp");
    tr.setStick([-0.25, 0.5]);
    expect(tr.sample(0)).toEqual([-0.5, 1]);
    tr.setStick([-9, 9]); // wild stick values clamp to the unit box first
    expect(tr.sample(1)).toEqual([-2, 2]);
    tr.setStick(null);
    tr.release("ArrowUp");
    // decay applies after the stick lets go too
    expect(Math.abs(tr.sample(2)[0]!)).toBeLessThanOrEqual(2);
  });

  test("non-finite stick values are ignored", () => {
    const tr = new InputTracker(2.0);
    tr.setStick([NaN, 0]);
    expect(tr.sample(0)).toEqual([0, 0]);
  });

  test("never returns non-finite or out-of-clamp values", () => {
    const tr = new InputTracker(1.5);
    const codes = ["ArrowLeft", "ArrowRight", "ArrowUp", "ArrowDown", "KeyA", "KeyD", "KeyW", "KeyS"];
    let now = 0;
    for (let step = 0; step < 500; step++) {
      now += 17;
      const code = codes[step % codes.length]!;
      if (step % 3 === 0) tr.press(code);
      else if (step % 3 === 1) tr.release(code);
      else if (step % 7 === 2) tr.setStick(step % 2 === 0 ? [5, -5] : null);
      const [a, b] = tr.sample(now);
      expect(Number.isFinite(a)).toBe(true);
      expect(Number.isFinite(b)).toBe(true);
      expect(Math.abs(a)).toBeLessThanOrEqual(1.5);
      expect(Math.abs(b)).toBeLessThanOrEqual(1.5);
    }
  });

  test("ignores keys outside the map", () => {
    const tr = new InputTracker(2.0);
    expect(tr.press("KeyQ")).toBe(false);
    expect(tr.sample(0)).toEqual([0, 0]);
  });
});
