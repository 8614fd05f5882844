// Slot classification mirroring the service's guard rule: strict
// inequalities, so exactly 70 and exactly 180 mg/dl are safe. The parity
// test pins this against fixtures classified by the service itself.

export const HYPO_MG_DL = 70;
export const HYPER_MG_DL = 180;

export type SlotKind = "ok" | "hypo" | "hyper";

export function classifySlot(valueMgDl: number): SlotKind {
    if (valueMgDl < HYPO_MG_DL) return "hypo";
    if (valueMgDl > HYPER_MG_DL) return "hyper";
    return "ok";
}

export function classifyTrace(traceMgDl: number[]): SlotKind[] {
    return traceMgDl.map(classifySlot);
}
