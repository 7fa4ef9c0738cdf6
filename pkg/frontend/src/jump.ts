import type { Source } from "./types.js";

/**
 * Resolve the document-viewer link for a candidate's source location.
 * Returns null when the template is unset or the source is incomplete;
 * the view renders those as a disabled link with a tooltip.
 */
export function urlForSource(template: string | null, source: Source): string | null {
  if (!template || !source.doc || !source.section) return null;
  return template
    .replace("{doc}", encodeURIComponent(source.doc))
    .replace("{section}", encodeURIComponent(source.section));
}
