//! Start a broker, publish on a named port and read the messages back.

use tutorbot::portnet::{list_ports, subscribe, Broker, OutPort, SessionClock};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let broker = Broker::start("127.0.0.1:0")?;
    let addr = broker.addr().to_string();

    let sub = subscribe(&addr, "/Robot/Say")?;
    let mut out = OutPort::open(&addr, "/Robot/Say", SessionClock::start())?;
    for text in ["hello", "please say testing a b c"] {
        out.publish(text)?;
    }
    // A second writer on the same name is refused.
    let clash = OutPort::open(&addr, "/Robot/Say", SessionClock::start());
    println!("second open: {}", clash.err().map(|e| e.to_string()).unwrap_or_default());

    while let Some(m) = sub.next_message(0.5)? {
        println!("{:>8.4}  {}  {}", m.timestamp, m.topic, m.payload);
    }
    for (name, dir) in list_ports(&addr)? {
        println!("port {name} ({})", dir.as_str());
    }
    broker.shutdown();
    Ok(())
}
