use icorr_core::analytics::*;
use icorr_core::mobility::{displacement_law, DisplacementLaw, MobilitySpec};
fn main() {
    for k in [30.0, 300.0] {
        for u in [1u32, 2, 5] {
            let net = NetworkConfig::new(MobilitySpec::new(50, u, 0).unwrap(), 10.0, 0.5,
                PathlossSpec::new(2.0, 0.5).unwrap(), PopulationSpec::new(k, 1.0).unwrap()).unwrap();
            let clear = net.with_mean_obstacles(0.0).unwrap();
            let law = displacement_law(net.mobility(), 1).unwrap();
            let idl = DisplacementLaw::identity(50, 1);
            let mut ok_static = true;
            for base in 1..=25u32 {
                let p = net.point(base, 0.5).unwrap();
                let mobile = pearson_rho_with_law(&net, &p, &law).unwrap();
                let stat = pearson_rho_with_law(&net, &p, &idl).unwrap();
                if mobile >= stat { ok_static = false; }
            }
            let center = net.point(25, 0.5).unwrap();
            let edge = net.point(1, 0.5).unwrap();
            let rho_c_b = pearson_rho_with_law(&net, &center, &law).unwrap();
            let rho_c_nb = pearson_rho_with_law(&clear, &center, &law).unwrap();
            let rho_e_b = pearson_rho_with_law(&net, &edge, &law).unwrap();
            let rho_e_nb = pearson_rho_with_law(&clear, &edge, &law).unwrap();
            println!("K={k:5} u={u}: mobile<static everywhere={ok_static} | center rho_b={rho_c_b:.4} rho_nb={rho_c_nb:.4} | edge rho_b={rho_e_b:.4} rho_nb={rho_e_nb:.4}");
        }
    }
}
