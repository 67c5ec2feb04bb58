import express, { Express, Request, Response } from "express";
import { z } from "zod";
import {
  healthSchema,
  paramSchemas,
  responseSchemas,
  TOOL_NAMES,
  ToolName,
  toolRequestSchema,
} from "./schema.js";
import { detectObjects, estimateDepth, segmentAndMark, slidingWindowDetection } from "./stub.js";

export type ServerMode = "stub" | "real";

export interface ServerConfig {
  mode: ServerMode;
  /** Upstream base URL for real mode; requests are forwarded per tool. */
  upstreamUrl?: string;
}

const STUB_VERSIONS: Record<string, string> = {
  detect_objects: "stub-detector-1",
  sliding_window_detection: "stub-detector-1",
  segment_and_mark: "stub-segmenter-1",
  estimate_depth: "stub-depth-1",
};

function isToolName(name: string): name is ToolName {
  return (TOOL_NAMES as readonly string[]).includes(name);
}

function runStubTool(tool: ToolName, imageBytes: Buffer, params: Record<string, unknown>): object {
  const meta = { server_mode: "stub", model_version: STUB_VERSIONS[tool] };
  switch (tool) {
    case "detect_objects": {
      const query = params.query as string;
      const threshold = (params.threshold as number | undefined) ?? 0.3;
      return { detections: detectObjects(imageBytes, query, threshold), ...meta };
    }
    case "sliding_window_detection": {
      return { detections: slidingWindowDetection(imageBytes, params.query as string), ...meta };
    }
    case "segment_and_mark": {
      const granularity = (params.granularity as number | undefined) ?? 3;
      const markType = (params.mark_type as "number" | "letter" | undefined) ?? "number";
      const { image, regions } = segmentAndMark(imageBytes, granularity, markType);
      return { image: image.toString("base64"), regions, ...meta };
    }
    case "estimate_depth": {
      return { image: estimateDepth(imageBytes).toString("base64"), ...meta };
    }
  }
}

async function forwardToUpstream(
  upstreamUrl: string,
  tool: ToolName,
  body: unknown,
): Promise<object> {
  const response = await fetch(`${upstreamUrl}/v1/tools/${tool}`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!response.ok) {
    throw new Error(`upstream returned ${response.status}`);
  }
  return (await response.json()) as object;
}

export function createApp(config: ServerConfig): Express {
  const app = express();
  app.use(express.json({ limit: "32mb" }));

  app.get("/healthz", (_req: Request, res: Response) => {
    const payload = {
      status: "ok",
      mode: config.mode,
      model_versions: config.mode === "stub" ? STUB_VERSIONS : { upstream: config.upstreamUrl ?? "" },
    };
    res.json(healthSchema.parse(payload));
  });

  app.post("/v1/tools/:name", async (req: Request, res: Response) => {
    const name = String(req.params.name);
    if (!isToolName(name)) {
      res.status(404).json({
        error: `unknown tool '${name}'`,
        allowed_tools: TOOL_NAMES,
      });
      return;
    }
    const parsedRequest = toolRequestSchema.safeParse(req.body);
    if (!parsedRequest.success) {
      res.status(400).json({ error: "request violates schema", details: z.treeifyError(parsedRequest.error) });
      return;
    }
    const parsedParams = paramSchemas[name].safeParse(parsedRequest.data.params);
    if (!parsedParams.success) {
      res.status(400).json({ error: "params violate tool signature", details: z.treeifyError(parsedParams.error) });
      return;
    }
    let imageBytes: Buffer;
    try {
      imageBytes = Buffer.from(parsedRequest.data.image, "base64");
      if (imageBytes.length === 0) throw new Error("empty image payload");
      // Probe the PNG header early so decode failures are payload errors.
      if (imageBytes.readUInt32BE(0) !== 0x89504e47) throw new Error("not a PNG payload");
    } catch (error) {
      res.status(400).json({ error: `image does not decode: ${(error as Error).message}` });
      return;
    }
    try {
      const payload =
        config.mode === "stub"
          ? runStubTool(name, imageBytes, parsedParams.data as Record<string, unknown>)
          : await forwardToUpstream(config.upstreamUrl as string, name, parsedRequest.data);
      res.json(responseSchemas[name].parse(payload));
    } catch (error) {
      res.status(502).json({ error: `tool execution failed: ${(error as Error).message}` });
    }
  });

  return app;
}
