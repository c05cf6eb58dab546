// Formatting helpers shared by every view. The contract tests format the
// raw fixture fields with these same functions, so a renderer that prints
// anything else fails loudly.

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const group = (digits: string) =>
  digits.replace(/\B(?=(\d{3})+(?!\d))/g, ",");

/** MW and MWs quantities: whole numbers with thousands separators. */
export function fmtMw(v: number): string {
  const r = Math.round(v);
  return (r < 0 ? "-" : "") + group(String(Math.abs(r)));
}

/** Rates in Hz/s (RoCoF values and limits). */
export function fmtHzS(v: number): string {
  return v.toFixed(2);
}

/** Frequencies in Hz (nadir, zenith, their limits). */
export function fmtHz(v: number): string {
  return v.toFixed(3);
}

/** Percentages, one decimal; the unit is rendered separately. */
export function fmtPct(v: number): string {
  return v.toFixed(1);
}

/** Analytics percentages keep two decimals to match the summary tables. */
export function fmtPct2(v: number): string {
  return v.toFixed(2);
}

export function fmtMargin(v: number): string {
  return v.toFixed(3);
}

export function fmtCount(v: number): string {
  return String(v);
}

/** Unix seconds to a compact UTC stamp. */
export function fmtTs(ts: number): string {
  return new Date(ts * 1000).toISOString().slice(0, 19).replace("T", " ") + "Z";
}

export function fmtSeconds(v: number): string {
  return v.toFixed(2) + " s";
}

/** CSS-safe class suffix for a binding flag ("RoCoF-" -> "rocofm"). */
export function flagClass(flag: string): string {
  return flag.toLowerCase().replace(/\+/g, "p").replace(/-/g, "m").replace(/\s+/g, "");
}

export function flagBadge(flag: string): string {
  return `<span class="badge b-${flagClass(flag)}">${esc(flag)}</span>`;
}
