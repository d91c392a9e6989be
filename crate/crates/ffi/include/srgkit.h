/* SPDX-License-Identifier: Apache-2.0 */

#ifndef SRGKIT_H
#define SRGKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Edge relation codes, as in the `edge_type` of an encoded graph.
 */
#define SRG_RELATION_CONTROL 0

#define SRG_RELATION_DATA 1

#define SRG_RELATION_EFFECT 2

/**
 * Label codes accepted by the build functions.
 */
#define SRG_LABEL_BENIGN 0

#define SRG_LABEL_AEC 1

#define SRG_LABEL_UNLABELED -1

/**
 * Result codes. Zero is success.
 */
typedef enum SrgStatus {
  SRG_STATUS_OK = 0,
  SRG_STATUS_NULL_POINTER = 1,
  SRG_STATUS_INVALID_UTF8 = 2,
  SRG_STATUS_INVALID_HEX = 3,
  SRG_STATUS_INVALID_JSON = 4,
  SRG_STATUS_INVALID_ARGUMENT = 5,
  SRG_STATUS_OUT_OF_RANGE = 6,
  SRG_STATUS_INTERNAL = 7,
} SrgStatus;

/**
 * Opaque graph handle.
 */
typedef struct SrgGraph SrgGraph;

/**
 * One typed edge: `src` depends on `dst`.
 */
typedef struct SrgEdge {
  size_t src;
  size_t dst;
  uint8_t relation;
} SrgEdge;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Vocabulary version of the node feature encoding.
 */
uint32_t srg_vocab_version(void);

/**
 * Builds a graph from raw runtime bytecode.
 *
 * # Safety
 * `contract_id` must be a NUL-terminated string, `code` must point to
 * `len` readable bytes (or be null when `len` is 0) and `out` must be
 * writable.
 */
enum SrgStatus srg_build_from_bytes(const char *contract_id,
                                    int32_t label,
                                    const uint8_t *code,
                                    size_t len,
                                    struct SrgGraph **out);

/**
 * Builds a graph from hex text, with or without a `0x` prefix.
 *
 * # Safety
 * `contract_id` and `hex` must be NUL-terminated strings and `out` must
 * be writable.
 */
enum SrgStatus srg_build_from_hex(const char *contract_id,
                                  int32_t label,
                                  const char *hex,
                                  struct SrgGraph **out);

/**
 * Parses a graph from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` must be writable.
 */
enum SrgStatus srg_graph_from_json(const char *json, struct SrgGraph **out);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void srg_graph_free(struct SrgGraph *g);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t srg_graph_node_count(const struct SrgGraph *g);

/**
 * Number of edges, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t srg_graph_edge_count(const struct SrgGraph *g);

/**
 * Reads edge `index`.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SrgStatus srg_graph_edge(const struct SrgGraph *g, size_t index, struct SrgEdge *out);

/**
 * Reads the program counter and opcode name of node `index`. The name is
 * a new string for `srg_string_free`; pass null to skip it.
 *
 * # Safety
 * `g` must be a live handle, `pc` writable, `op` null or writable.
 */
enum SrgStatus srg_graph_node(const struct SrgGraph *g, size_t index, uint64_t *pc, char **op);

/**
 * Serializes a graph to JSON.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SrgStatus srg_graph_to_json(const struct SrgGraph *g, char **out);

/**
 * Serializes the learning-ready encoding of a graph to JSON.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SrgStatus srg_graph_encode_json(const struct SrgGraph *g, char **out);

/**
 * Renders a graph as Graphviz DOT.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SrgStatus srg_graph_to_dot(const struct SrgGraph *g, bool reversed, char **out);

/**
 * Injects `round(nodes * k_pct / 100)` nodes with `m_edges` edges each
 * into a copy of `g`.
 *
 * # Safety
 * `g` must be a live handle and `out` writable.
 */
enum SrgStatus srg_inject_nodes(const struct SrgGraph *g,
                                double k_pct,
                                size_t m_edges,
                                uint64_t seed,
                                struct SrgGraph **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void srg_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library on this thread.
 */
const char *srg_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRGKIT_H */
