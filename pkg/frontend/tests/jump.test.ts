import { describe, expect, it } from "vitest";

import { urlForSource } from "../src/jump.js";

const TEMPLATE = "/docs/{doc}.html#{section}";

describe("urlForSource", () => {
  it("substitutes doc and section into the template", () => {
    expect(urlForSource(TEMPLATE, { doc: "JB4732", section: "E.6.3" })).toBe(
      "/docs/JB4732.html#E.6.3",
    );
  });

  it("returns null when the section is missing", () => {
    expect(urlForSource(TEMPLATE, { doc: "JB4732", section: "" })).toBeNull();
  });

  it("returns null when the doc is missing", () => {
    expect(urlForSource(TEMPLATE, { doc: "", section: "E.6.3" })).toBeNull();
  });

  it("returns null when no template is configured", () => {
    expect(urlForSource(null, { doc: "JB4732", section: "E.6.3" })).toBeNull();
  });

  it("escapes URL-hostile characters", () => {
    expect(urlForSource(TEMPLATE, { doc: "a b", section: "c/d" })).toBe(
      "/docs/a%20b.html#c%2Fd",
    );
  });
});
