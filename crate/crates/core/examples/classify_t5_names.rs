//! Maps raw T5 parameter names to (component, layer, kind) cells, and shows a
//! custom rule table for a differently named model.

use ckpt_drift::arch_map::{classify_param, group_names, RuleTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t5 = RuleTable::t5_default();
    for name in [
        "encoder.block.0.layer.0.SelfAttention.q.weight",
        "encoder.block.5.layer.1.DenseReluDense.wo.weight",
        "decoder.block.3.layer.1.EncDecAttention.k.weight",
        "decoder.block.3.layer.2.DenseReluDense.wi.weight",
        "decoder.final_layer_norm.weight",
        "shared.weight",
    ] {
        match classify_param(name, &t5)? {
            Some(loc) => println!("{name:<52} -> {loc}"),
            None => println!("{name:<52} -> unclassified"),
        }
    }

    let rules = RuleTable::from_json(
        r#"[
            {"pattern": "enc\\.(?P<layer>\\d+)\\.attn\\.q", "component": "encoder", "kind": "q"},
            {"pattern": "enc\\.(?P<layer>\\d+)\\.mlp\\.up", "component": "encoder", "kind": "wi"},
            {"pattern": "enc\\.(?P<layer>\\d+)\\.mlp\\.down", "component": "encoder", "kind": "wo"}
        ]"#,
    )?;
    let grouping = group_names(["enc.0.attn.q", "enc.0.mlp.up", "enc.1.mlp.down", "head.proj"], &rules)?;
    for (loc, name) in &grouping.located {
        println!("{loc} <- {name}");
    }
    println!("unclassified: {:?}", grouping.unclassified);
    Ok(())
}
