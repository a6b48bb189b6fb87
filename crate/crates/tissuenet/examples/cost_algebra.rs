//! The stacked-layer cost algebra in action: closed-form memory/FLOP
//! counts for a stacked layer, the m× saving against its fully-connected
//! counterpart, and an exact cross-check against a built layer.

use tissuenet::arch::{ArchSpec, LayerSpec, UnitSpec};
use tissuenet::cost::{
    dense_costs_closed_form, measure_built_model, stacked_costs_closed_form, analyze,
};
use tissuenet::nn::Activation;

fn main() {
    // A stacked layer of m = 8 units {2, 4, 2}, 3x3 kernels, on 16x16 maps.
    let (m, d, c_h, c_in, c_out) = (8u64, 3u64, 4u64, 2u64, 2u64);
    let maps = (16u64, 16u64);
    let (m_s, c_s) = stacked_costs_closed_form(m, d, c_h, c_in, c_out, maps, maps);
    let (m_n, c_n) = dense_costs_closed_form(m, d, c_h, c_in, c_out, maps, maps);
    println!("stacked layer:  {m_s} params, {c_s} MACs");
    println!("dense twin:     {m_n} params, {c_n} MACs");
    println!("saving factor:  {}x params, {}x MACs (= m)", m_n / m_s, c_n / c_s);

    // The closed forms agree exactly with a built layer's weight tensors.
    let arch = ArchSpec {
        name: "demo-stack".into(),
        input_shape: vec![16, 16, 16],
        layers: vec![LayerSpec::StackedConv {
            units: vec![UnitSpec::new(2, 4, 2); 8],
            kernel: 3,
            stride: 1,
            padding: 1,
            activation: Activation::Relu,
        }],
        seed: 1,
    };
    let report = analyze(&arch).unwrap();
    let model = arch.build().unwrap();
    let (params, macs) = measure_built_model(&model, &arch.input_shape).unwrap();
    println!("\nanalyzer:       {} params, {} MACs", report.total_params, report.total_macs);
    println!("built layer:    {params} params, {macs} MACs");
    assert_eq!((report.total_params, report.total_macs), (params, macs));
    assert_eq!((report.total_params, report.total_macs), (m_s, c_s));
    println!("closed form == enumeration: exact");
}
