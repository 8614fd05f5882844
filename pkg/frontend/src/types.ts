// Wire types for the service API. Field names carry their units; the
// client never converts anything, it only echoes what the service sent.

export type SafetyStatus = "safe" | "flagged" | "unchecked";

export type RiskKind = "hypo" | "hyper";

export interface RiskEvent {
    slot: number;
    kind: RiskKind;
    value_mg_dl: number;
}

export interface Nutrients {
    carbohydrate_g: number;
    protein_g: number;
    fat_g: number;
    calories_cal: number;
    source: string;
    note?: string;
}

export interface PlanBlock {
    doses_iu: number[];
    safety_status: SafetyStatus;
    retitration_count: number;
}

export interface GuardIteration {
    iteration: number;
    doses_iu: number[];
    trace_mg_dl: number[];
    events: RiskEvent[];
    prompt_sha256: string;
    response_sha256: string;
    note: string;
}

export interface SessionRecord {
    session_id: string;
    patient_id: string;
    created_at: string;
    disclaimer: string;
    meal_text: string;
    nutrients: Nutrients;
    target_glucose_mg_dl: number[];
    plan: PlanBlock;
    forecast: { glucose_mg_dl: number[] };
    risk: { is_safe: boolean; events: RiskEvent[] };
    audit: GuardIteration[];
}

export interface SessionForm {
    patient_id: string;
    meal_text: string;
    target_glucose_mg_dl: number;
}
