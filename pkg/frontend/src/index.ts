export * from "./types.js";
export * from "./config.js";
export * from "./feed.js";
export * from "./sse.js";
export * from "./drafts.js";
export * from "./intervention.js";
export * from "./api.js";
export * from "./viewstate.js";
