export interface TaggedEntity {
  text: string;
  type: "PERSON" | "ORG" | "GPE" | "MISC";
}

// Rule-based named-entity tagger: runs of capitalized tokens, with
// honorifics marking persons and a few suffixes marking organizations.
// Spans are exported verbatim; lowercasing and de-duplication happen in
// the detector's manifest loader.

const TITLES = new Set([
  "Mr",
  "Mrs",
  "Ms",
  "Dr",
  "Prof",
  "President",
  "Senator",
  "Sir",
  "Lady",
]);

const ORG_SUFFIXES = new Set([
  "Inc",
  "Corp",
  "Ltd",
  "Co",
  "University",
  "Institute",
  "Agency",
  "Committee",
]);

const GPE_HINTS = new Set([
  "London",
  "Washington",
  "Paris",
  "Berlin",
  "Moscow",
  "Beijing",
  "China",
  "Russia",
  "France",
  "Germany",
  "America",
  "Britain",
  "Europe",
  "Texas",
  "California",
]);

const STOPWORDS = new Set(["The", "A", "An", "In", "On", "At", "But", "And", "It", "He", "She", "They"]);

function isCapitalized(token: string): boolean {
  return /^[A-Z][A-Za-z.'-]*$/.test(token);
}

function classify(tokens: string[]): TaggedEntity["type"] {
  if (TITLES.has(tokens[0].replace(/\.$/, ""))) {
    return "PERSON";
  }
  if (ORG_SUFFIXES.has(tokens[tokens.length - 1].replace(/\.$/, ""))) {
    return "ORG";
  }
  if (tokens.some((t) => GPE_HINTS.has(t))) {
    return "GPE";
  }
  return "MISC";
}

export function extractEntities(text: string): TaggedEntity[] {
  const out: TaggedEntity[] = [];
  const seen = new Set<string>();
  for (const sentence of text.split(/(?<=[.!?])\s+/)) {
    const tokens = sentence.split(/\s+/).map((t) => t.replace(/^[^A-Za-z0-9]+|[^A-Za-z0-9.'-]+$/g, ""));
    let run: string[] = [];
    let runStart = -1;
    const flush = () => {
      // A lone sentence-initial capital is just sentence case, unless it
      // is a known name hint or an honorific.
      if (run.length === 0) {
        return;
      }
      const sentenceInitial = runStart === 0;
      const strong =
        run.length > 1 ||
        TITLES.has(run[0].replace(/\.$/, "")) ||
        GPE_HINTS.has(run[0]) ||
        ORG_SUFFIXES.has(run[0]);
      if ((!sentenceInitial || strong) && !STOPWORDS.has(run[0])) {
        const span = run.join(" ");
        if (!seen.has(span)) {
          seen.add(span);
          out.push({ text: span, type: classify(run) });
        }
      }
      run = [];
      runStart = -1;
    };
    tokens.forEach((token, i) => {
      if (token.length > 0 && isCapitalized(token) && !STOPWORDS.has(token)) {
        if (run.length === 0) {
          runStart = i;
        }
        run.push(token);
      } else {
        flush();
      }
    });
    flush();
  }
  return out;
}
