import { z } from "zod";

export const TOOL_NAMES = [
  "detect_objects",
  "sliding_window_detection",
  "segment_and_mark",
  "estimate_depth",
] as const;

export type ToolName = (typeof TOOL_NAMES)[number];

export const toolRequestSchema = z
  .object({
    image: z.string(), // base64 PNG
    params: z.record(z.string(), z.unknown()),
  })
  .strict();

export type ToolRequest = z.infer<typeof toolRequestSchema>;

const box = z.array(z.number()).length(4);

export const detectionResponseSchema = z
  .object({
    detections: z.array(
      z.object({ box, label: z.string(), score: z.number().min(0).max(1) }).strict(),
    ),
    server_mode: z.enum(["stub", "real"]),
    model_version: z.string(),
  })
  .strict();

export const segmentationResponseSchema = z
  .object({
    image: z.string(),
    regions: z.array(z.object({ mark: z.string(), box }).strict()),
    server_mode: z.enum(["stub", "real"]),
    model_version: z.string(),
  })
  .strict();

export const depthResponseSchema = z
  .object({
    image: z.string(),
    server_mode: z.enum(["stub", "real"]),
    model_version: z.string(),
  })
  .strict();

export const healthSchema = z.object({
  status: z.string(),
  mode: z.enum(["stub", "real"]),
  model_versions: z.record(z.string(), z.string()),
});

export const responseSchemas: Record<ToolName, z.ZodTypeAny> = {
  detect_objects: detectionResponseSchema,
  sliding_window_detection: detectionResponseSchema,
  segment_and_mark: segmentationResponseSchema,
  estimate_depth: depthResponseSchema,
};

// Per-tool parameter schemas (the wire contract's params objects).
export const paramSchemas: Record<ToolName, z.ZodTypeAny> = {
  detect_objects: z
    .object({ query: z.string().min(1), threshold: z.number().min(0).max(1).optional() })
    .strict(),
  sliding_window_detection: z.object({ query: z.string().min(1) }).strict(),
  segment_and_mark: z
    .object({
      granularity: z.number().int().min(1).max(6).optional(),
      mark_type: z.enum(["number", "letter"]).optional(),
    })
    .strict(),
  estimate_depth: z.object({}).strict(),
};
