import { createApp, ServerMode } from "./server.js";

function argValue(flag: string): string | undefined {
  const index = process.argv.indexOf(flag);
  return index >= 0 ? process.argv[index + 1] : undefined;
}

const port = Number(argValue("--port") ?? process.env.TOOLSERVER_PORT ?? 8020);
const mode = (argValue("--mode") ?? process.env.TOOLSERVER_MODE ?? "stub") as ServerMode;
const upstreamUrl = argValue("--upstream") ?? process.env.TOOLSERVER_UPSTREAM;

if (mode !== "stub" && mode !== "real") {
  console.error(`unknown mode '${mode}'; use stub or real`);
  process.exit(2);
}
if (mode === "real" && !upstreamUrl) {
  console.error("real mode needs --upstream <url> (model inference host)");
  process.exit(2);
}

createApp({ mode, upstreamUrl }).listen(port, () => {
  console.log(`visual tool server listening on :${port} (mode=${mode})`);
});
