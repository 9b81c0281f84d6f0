// Typed client for the /v1 REST API. Every view reads through this module;
// nothing in the UI computes scores or labels on its own.

export type KgNode = {
  id: string;
  label: string;
  parent: string | null;
  children: string[];
  cluster_ref: string | null;
  origin: string;
};

export type KgDocument = { version: number; root: string; nodes: KgNode[] };

export type KgSearchResult = { node_id: string; path: string[]; labels: string[] };

export type Bar = { label: string; axis: "HMD" | "VMD"; score: number; table_ids: string[] };

export type MetaProfile = { version: number; cluster_id: string; bars: Bar[] };

export type TableCellPayload = string | { text: string; nested_table: TablePayload };

export type TablePayload = {
  table_id: string;
  parent_id: string;
  caption: string;
  labels: { raw: string; parent: number | null }[];
  hmd: number[];
  vmd: number[];
  cells: TableCellPayload[][];
};

export type Snippet = { field: string; text: string; highlight_spans: [number, number][] };

export type PublicationHit = {
  doc_id: string;
  score: number;
  matched: Record<string, string[]>;
  snippets: Snippet[];
  render: null | {
    table_captions: string[];
    title: string;
    authors: string[];
    abstract: string;
  };
};

export type Binding = {
  predicate_index: number;
  label: string;
  axis: string;
  confidence: number;
  cells: { table_id: string; row: number; col: number }[];
  matched_literal: number | null;
};

export type TableHit = { table_id: string; score: number; bindings: Binding[] };

export type ValuePredicatePayload = {
  kind: "EQ_NUM" | "IN_RANGE" | "CONTAINS_TEXT";
  number?: number | null;
  text?: string | null;
};

export type PredicatePayload = {
  attribute_query: string;
  value?: ValuePredicatePayload | null;
};

export type ChatResponse = {
  version: number;
  tables: TableHit[];
  hits: PublicationHit[];
  narrative: string;
  exchange: {
    status: string;
    context_blocks: { source_id: string; text: string }[];
  };
  parsed: {
    structural: { predicates: { attribute_query: string; value: { kind: string; number: number | null } | null }[] };
    textual: string;
    identified: { surface: string; matched_attribute: string; value: number | null }[];
  };
};

export type ReviewItem = {
  item_id: string;
  status: string;
  decision: {
    action: string;
    confidence: number;
    rationale: string;
    subtree: { root: { label: string; children: { label: string }[] } };
  };
};

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async go<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    const body = await resp.json();
    if (!resp.ok) {
      const err = body?.error ?? { code: `HTTP${resp.status}`, message: "request failed" };
      throw new ApiError(resp.status, err.code, err.message);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.go<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getKg(): Promise<KgDocument> {
    return this.go("/v1/kg");
  }

  searchKg(query: string): Promise<{ results: KgSearchResult[] }> {
    return this.go(`/v1/kg/search?q=${encodeURIComponent(query)}`);
  }

  nodeTables(nodeId: string): Promise<{ cluster_id: string; tables: TablePayload[] }> {
    return this.go(`/v1/kg/node/${encodeURIComponent(nodeId)}/tables`);
  }

  nodeMetaprofile(nodeId: string): Promise<MetaProfile> {
    return this.go(`/v1/kg/node/${encodeURIComponent(nodeId)}/metaprofile`);
  }

  drilldown(
    nodeId: string,
    bars: { label: string; axis: string }[],
  ): Promise<{ cluster: { cluster_id: string; member_table_ids: string[] }; kg_node_id: string | null; empty: boolean }> {
    return this.post(`/v1/kg/node/${encodeURIComponent(nodeId)}/drilldown`, { bars });
  }

  searchPublicationsAll(query: string, k = 20): Promise<{ hits: PublicationHit[] }> {
    return this.post("/v1/search/publications", { mode: "all", query, k });
  }

  searchPublicationsFielded(fields: Record<string, string>, k = 20): Promise<{ hits: PublicationHit[] }> {
    return this.post("/v1/search/publications", { mode: "fielded", fields, k });
  }

  searchTables(predicates: PredicatePayload[], k = 20): Promise<{ hits: TableHit[] }> {
    return this.post("/v1/search/tables", { predicates, k });
  }

  chat(question: string, engine = "ALL", llm: string | null = "stub"): Promise<ChatResponse> {
    return this.post("/v1/chat", { question, engine, llm });
  }

  reviewList(): Promise<{ items: ReviewItem[] }> {
    return this.go("/v1/review");
  }

  reviewApply(itemId: string, verdict: string): Promise<{ item: ReviewItem }> {
    return this.post(`/v1/review/${encodeURIComponent(itemId)}`, { verdict });
  }
}
