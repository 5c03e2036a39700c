import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { HEALTH_COLORS, ReportPanel, countdownLabel } from "../src/panel.js";
import { StubApi, potholeFeature } from "./stub_api.js";

describe("report panel", () => {
  let stub: StubApi;
  let api: ApiClient;

  beforeEach(() => {
    stub = new StubApi();
    api = new ApiClient("", stub.fetch);
    stub.seedSegment(); // id 1, yellow, 150 m
    stub.potholes = [potholeFeature(1, 20.0005, 85.0, { segment_id: 1 })];
  });

  it("renders the health banner, countdown, and density from the report", async () => {
    const panel = new ReportPanel(api);
    await panel.load(1);
    expect(panel.health).toBe("yellow");
    expect(panel.bannerColor).toBe(HEALTH_COLORS.yellow);
    const html = panel.html();
    expect(html).toContain("155 days to warranty deadline");
    expect(html).toContain("Density: 6.67 potholes/km");
    expect(html).toContain("Active: 1, repaired: 0");
    expect(html).toContain("Contractor: Shakti Infra");
  });

  it("words an expired warranty as time overdue", () => {
    stub.warrantyDays = -3;
    const report = {
      warranty: { status: "expired" as const, days_to_deadline: -3 },
    };
    expect(countdownLabel(report as Parameters<typeof countdownLabel>[0])).toBe(
      "warranty expired 3 days ago",
    );
  });

  it("hides the contact line unless the caller supplies one", async () => {
    const panel = new ReportPanel(api);
    await panel.load(1);
    expect(panel.html()).not.toContain("ops@shakti.example");

    await panel.load(1, "ops@shakti.example");
    expect(panel.html()).toContain("Contact: ops@shakti.example");
  });

  it("notify renders the pending event, then settles to sent after one poll", async () => {
    await api.login(stub.username, stub.password);

    // Gate the refresh so the optimistic pending row is observable. The
    // refresh starting at all proves the row was already pushed.
    let release!: () => void;
    const gate = new Promise<void>((resolve) => (release = resolve));
    let reachedRefresh!: () => void;
    const refreshStarted = new Promise<void>((resolve) => (reachedRefresh = resolve));
    let reportReads = 0;
    const gated: typeof fetch = async (input, init) => {
      if (String(input).includes("/report") && ++reportReads > 1) {
        reachedRefresh();
        await gate;
      }
      return stub.fetch(input, init);
    };
    const gatedApi = new ApiClient("", gated);
    gatedApi.token = api.token;

    const panel = new ReportPanel(gatedApi);
    await panel.load(1);
    expect(panel.events).toHaveLength(0);

    const pending = panel.notify();
    await refreshStarted;
    expect(panel.events).toHaveLength(1);
    expect(panel.events[0]?.delivery_status).toBe("pending");
    expect(panel.html()).toContain("event-pending");

    release();
    await expect(pending).resolves.toBe(true);
    expect(panel.events).toHaveLength(1);
    expect(panel.events[0]?.delivery_status).toBe("sent");
    expect(panel.html()).toContain("event-sent");
  });

  it("reports same-day repeats as suppressed", async () => {
    await api.login(stub.username, stub.password);
    const panel = new ReportPanel(api);
    await panel.load(1);
    expect(await panel.notify()).toBe(true);
    expect(await panel.notify()).toBe(false);
    expect(panel.notice).toBe("already notified today");
    expect(panel.events).toHaveLength(1);
  });

  it("routes missing credentials to the auth callback instead of throwing", async () => {
    let askedToLogin = false;
    const panel = new ReportPanel(api, () => (askedToLogin = true));
    await panel.load(1);
    expect(await panel.notify()).toBe(false);
    expect(askedToLogin).toBe(true);
    expect(panel.events).toHaveLength(0);
  });
});
