/** Wire types for the roadhealth HTTP API. */

export interface LatLng {
  lat: number;
  lon: number;
}

export type HealthName = "green" | "yellow" | "orange" | "red";
export type PotholeStatus = "active" | "repaired";
export type Severity = "minor" | "moderate" | "severe";

export interface PotholeProperties {
  severity: Severity;
  status: PotholeStatus;
  first_seen: string;
  last_seen: string;
  detection_count: number;
  segment_id: number | null;
  thumbnail: string | null;
}

export interface PointGeometry {
  type: "Point";
  /** GeoJSON axis order: [lon, lat]. */
  coordinates: [number, number];
}

export interface LineGeometry {
  type: "LineString";
  coordinates: [number, number][];
}

export interface Feature<G, P> {
  type: "Feature";
  id: string;
  geometry: G;
  properties: P;
}

export type PotholeFeature = Feature<PointGeometry, PotholeProperties>;

export interface SegmentProperties {
  health: HealthName;
  contractor_name: string;
  construction_date: string;
  budget: number;
  warranty_end: string;
  category: string | null;
  length_m: number;
}

export type SegmentFeature = Feature<LineGeometry, SegmentProperties>;

export interface FeatureCollection<F> {
  type: "FeatureCollection";
  features: F[];
}

export interface ContractDetail {
  contractor_name: string;
  construction_date: string;
  budget: number;
  warranty_end: string;
  category: string | null;
  /** Present only in authenticated create/edit responses. */
  contractor_contact?: string;
}

/** Authenticated segment JSON returned by POST/PATCH /api/segments. */
export interface SegmentDetail {
  id: number;
  /** Internal axis order: [lat, lon]. */
  geometry: [number, number][];
  health: HealthName;
  length_m: number;
  contract: ContractDetail;
  created_by?: string;
}

export interface AlertRow {
  id: number;
  transition: string;
  health: string;
  message: string;
  delivery_status: "pending" | "sent" | "failed";
  created_at: string;
  attempts: number;
}

export interface SegmentReport {
  segment: SegmentDetail;
  health: HealthName;
  density_per_km: number;
  warranty: { status: "active" | "expired"; days_to_deadline: number };
  potholes: {
    active: number;
    repaired: number;
    active_by_severity: Record<Severity, number>;
  };
  alerts: AlertRow[];
}

export interface NotifyResponse {
  suppressed: boolean;
  event?: {
    id: number;
    segment_id: number;
    transition: string;
    delivery_status: "pending" | "sent" | "failed";
    attempts: number;
    created_at: string;
  };
}

export interface IngestStatistics {
  batch_id: number;
  statistics: Record<string, unknown>;
}
