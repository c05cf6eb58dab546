// Fixture loading and light HTML probing shared by the contract tests.
// Fixtures are recorded from a live server (scripts/record_fixtures.py),
// so asserting against them is asserting against the real API.

import { readFileSync } from "node:fs";

export function fixture<T>(name: string): T {
  const url = new URL(`../fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as T;
}

export function fixtureText(name: string): string {
  return readFileSync(new URL(`../fixtures/${name}`, import.meta.url), "utf8");
}

const escRe = (s: string) => s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");

/** Text content of the first element carrying attr="value". */
export function grab(html: string, attr: string, value: string): string {
  const re = new RegExp(`${escRe(attr)}="${escRe(value)}"[^>]*>([^<]*)<`);
  const m = html.match(re);
  if (!m) throw new Error(`no ${attr}="${value}" in rendered html`);
  return m[1].trim();
}

/** Text content of the first element carrying a bare marker attribute. */
export function grabBare(html: string, attr: string): string {
  const re = new RegExp(`${escRe(attr)}(?:="[^"]*")?[^>]*>([^<]*)<`);
  const m = html.match(re);
  if (!m) throw new Error(`no ${attr} in rendered html`);
  return m[1].trim();
}

/** Slice from a marker to the end of its table row. */
export function rowOf(html: string, marker: string): string {
  const i = html.indexOf(marker);
  if (i === -1) throw new Error(`marker ${marker} not found`);
  const end = html.indexOf("</tr>", i);
  return html.slice(i, end === -1 ? html.length : end);
}

export function allMatches(html: string, re: RegExp): string[] {
  return [...html.matchAll(re)].map((m) => m[1]);
}
